#include <gtest/gtest.h>

#include <cmath>

#include "enzygen/amino.hpp"
#include "enzygen/enzyme_model.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/losses.hpp"
#include "enzygen/substrate_model.hpp"
#include "test_support.hpp"

using namespace enzygen;
using enzygen::testing::random_tensor;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.d = 8;
  c.heads = 2;
  c.attention_layers = 2;
  c.interleave_period = 1;
  c.substrate_layers = 1;
  c.k_neighbors = 4;
  c.max_len = 32;
  return c;
}

}  // namespace

TEST(JointLoss, UniformLogitsGiveLogTwentyPerFreeResidue) {
  Tape t;
  const std::vector<std::size_t> seq{0, 5, 9, 19, 3};
  Var logits = t.constant(Tensor({5, kNumAminoAcids}, 0.25));
  Var coords = t.constant(Tensor({5, 3}));
  const LossTerms terms = joint_loss(t, logits, seq, coords, Tensor({5, 3}), {1, 3}, std::nullopt, 1.0,
                                     Phase::kStructure);
  EXPECT_NEAR(terms.seq_nll.item(), 3 * std::log(20.0), 1e-12);
  EXPECT_EQ(terms.coord_l2.item(), 0.0);
  EXPECT_EQ(terms.binding_ce.item(), 0.0);
}

TEST(JointLoss, MatchesTermByTermOracle) {
  Rng rng(3);
  const std::size_t n = 7;
  const Tensor logits = random_tensor({n, kNumAminoAcids}, rng, -3, 3);
  const Tensor out = random_tensor({n, 3}, rng, -5, 5);
  const Tensor target = random_tensor({n, 3}, rng, -5, 5);
  const Tensor bind = random_tensor({1, 2}, rng);
  std::vector<std::size_t> seq;
  for (std::size_t i = 0; i < n; ++i) seq.push_back(rng.below(kNumAminoAcids));
  const std::vector<std::size_t> motif{0, 4};
  const double lambda_half = 1.0;

  long double nll = 0, l2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || i == 4) continue;
    long double z = 0;
    for (std::size_t a = 0; a < kNumAminoAcids; ++a) z += std::exp(static_cast<long double>(logits.at(i, a)));
    nll -= logits.at(i, seq[i]) - std::log(z);
    for (std::size_t c = 0; c < 3; ++c) l2 += std::pow(static_cast<long double>(out.at(i, c)) - target.at(i, c), 2);
  }
  for (int label : {0, 1}) {
    const std::size_t col = label == 1 ? 0 : 1;
    const long double ce = -(bind[col] - std::log(std::exp(static_cast<long double>(bind[0])) +
                                                  std::exp(static_cast<long double>(bind[1]))));
    Tape t;
    const LossTerms terms = joint_loss(t, t.constant(logits), seq, t.constant(out), target, motif,
                                       BindingTarget{t.constant(bind), label}, lambda_half, Phase::kJoint);
    EXPECT_NEAR(terms.seq_nll.item(), static_cast<double>(nll), 1e-10);
    EXPECT_NEAR(terms.coord_l2.item(), static_cast<double>(lambda_half * l2), 1e-10);
    EXPECT_NEAR(terms.binding_ce.item(), static_cast<double>(ce), 1e-12);
  }
}

TEST(JointLoss, TotalIsExactSumOfComponents) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(10);
    std::vector<std::size_t> seq;
    for (std::size_t i = 0; i < n; ++i) seq.push_back(rng.below(kNumAminoAcids));
    Tape t;
    const LossTerms terms =
        joint_loss(t, t.constant(random_tensor({n, kNumAminoAcids}, rng)), seq, t.constant(random_tensor({n, 3}, rng)),
                   random_tensor({n, 3}, rng), {0}, BindingTarget{t.constant(random_tensor({1, 2}, rng)), 1}, 1.0,
                   Phase::kJoint);
    const LossBreakdown b = terms.values();
    EXPECT_EQ(b.total, (b.seq_nll + b.coord_l2) + b.binding_ce);
  }
}

TEST(JointLoss, PhaseOneIgnoresBinding) {
  Tape t;
  Tensor bind = Tensor::matrix(1, 2, {2.0, -1.0});
  bind.set_requires_grad(true);
  Var b = t.leaf(bind);
  const LossTerms terms = joint_loss(t, t.constant(Tensor({2, kNumAminoAcids})), {1, 2}, t.constant(Tensor({2, 3})),
                                     Tensor({2, 3}), {}, BindingTarget{b, 0}, 1.0, Phase::kStructure);
  t.backward(terms.total);
  EXPECT_EQ(terms.binding_ce.item(), 0.0);
  EXPECT_EQ(bind.grad()[0], 0.0);
  EXPECT_EQ(bind.grad()[1], 0.0);
}

TEST(JointLoss, AllMotifGivesZeroSequenceAndCoordinateTerms) {
  Tape t;
  const LossTerms terms = joint_loss(t, t.constant(Tensor({2, kNumAminoAcids}, 1.0)), {1, 2},
                                     t.constant(Tensor({2, 3}, 4.0)), Tensor({2, 3}), {0, 1}, std::nullopt, 1.0,
                                     Phase::kStructure);
  EXPECT_EQ(terms.seq_nll.item(), 0.0);
  EXPECT_EQ(terms.coord_l2.item(), 0.0);
}

TEST(JointLoss, LambdaScalesCoordinateTerm) {
  Tape t;
  Tensor out({1, 3});
  out[0] = 3.0;
  out[1] = 4.0;
  const LossTerms terms = joint_loss(t, t.constant(Tensor({1, kNumAminoAcids})), {0}, t.constant(out), Tensor({1, 3}),
                                     {}, std::nullopt, 0.5, Phase::kStructure);
  EXPECT_DOUBLE_EQ(terms.coord_l2.item(), 12.5);
}

TEST(JointLoss, Errors) {
  Tape t;
  Var logits = t.constant(Tensor({2, kNumAminoAcids}));
  Var coords = t.constant(Tensor({2, 3}));
  EXPECT_THROW(joint_loss(t, logits, {0, 1}, coords, Tensor({2, 3}), {}, std::nullopt, 1.0, Phase::kJoint),
               ContractError);
  EXPECT_THROW(joint_loss(t, logits, {0, 1, 2}, coords, Tensor({2, 3}), {}, std::nullopt, 1.0, Phase::kStructure),
               DimensionError);
  EXPECT_THROW(joint_loss(t, logits, {0, 20}, coords, Tensor({2, 3}), {}, std::nullopt, 1.0, Phase::kStructure),
               IndexError);
}

TEST(JointLoss, InvariantUnderJointRigidMotion) {
  // Moving both the initial trace and the target by the same rigid motion
  // leaves every loss term unchanged.
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 2);
  Rng rng(5);
  p.get(param_names::neighborhood(0, "coord.w2")) = random_tensor({c.d, 1}, rng);
  EnzymeInput in;
  for (std::size_t i = 0; i < 10; ++i) in.sequence.push_back(rng.below(kNumAminoAcids));
  in.motif = {2, 6};
  in.tag.levels = {0, 0, 0, 0};
  const Tensor x0 = random_tensor({10, 3}, rng, -6, 6);
  const Tensor target = random_tensor({10, 3}, rng, -6, 6);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const RigidTransform g = random_rigid(s);
    Tape t;
    const NaelOutput a = forward_from_initial(t, p, c, in, x0);
    const NaelOutput b = forward_from_initial(t, p, c, in, g.apply(x0));
    const LossBreakdown la =
        joint_loss(t, a.logits, in.sequence, a.coords, target, in.motif, std::nullopt, 1.0, Phase::kStructure).values();
    const LossBreakdown lb = joint_loss(t, b.logits, in.sequence, b.coords, g.apply(target), in.motif, std::nullopt,
                                        1.0, Phase::kStructure)
                                 .values();
    EXPECT_NEAR(la.seq_nll, lb.seq_nll, 1e-9);
    EXPECT_NEAR(la.coord_l2, lb.coord_l2, 1e-9 * std::max(1.0, la.coord_l2));
  }
}

TEST(SumLosses, ComponentWiseAndExact) {
  Tape t;
  auto part = [&](double s, double c, double b) {
    LossTerms x;
    x.seq_nll = t.constant(Tensor::scalar(s));
    x.coord_l2 = t.constant(Tensor::scalar(c));
    x.binding_ce = t.constant(Tensor::scalar(b));
    x.total = add(add(x.seq_nll, x.coord_l2), x.binding_ce);
    return x;
  };
  const LossBreakdown total = sum_losses(t, {part(1.5, 0.1, 0.3), part(2.25, 0.7, 0.0)}).values();
  EXPECT_EQ(total.seq_nll, 1.5 + 2.25);
  EXPECT_EQ(total.coord_l2, 0.1 + 0.7);
  EXPECT_EQ(total.binding_ce, 0.3 + 0.0);
  EXPECT_EQ(total.total, (total.seq_nll + total.coord_l2) + total.binding_ce);
  EXPECT_EQ(sum_losses(t, {}).values().total, 0.0);
}
