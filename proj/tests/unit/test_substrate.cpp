#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "enzygen/errors.hpp"
#include "enzygen/substrate_model.hpp"
#include "test_support.hpp"

using namespace enzygen;
using enzygen::testing::max_abs_diff;
using enzygen::testing::random_tensor;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.d = 4;
  c.heads = 2;
  c.attention_layers = 2;
  c.interleave_period = 1;
  c.substrate_layers = 2;
  c.k_neighbors = 3;
  c.max_len = 16;
  return c;
}

SubstrateRecord random_molecule(std::size_t m, Rng& rng) {
  SubstrateRecord s;
  s.name = "mol";
  s.atoms = random_tensor({m, kSubstrateFeatures}, rng);
  s.coords = random_tensor({m, 3}, rng, -4, 4);
  return s;
}

SubstrateRecord permuted(const SubstrateRecord& s, const std::vector<std::size_t>& order) {
  SubstrateRecord out = s;
  for (std::size_t r = 0; r < order.size(); ++r) {
    for (std::size_t c = 0; c < kSubstrateFeatures; ++c) out.atoms.at(r, c) = s.atoms.at(order[r], c);
    for (std::size_t c = 0; c < 3; ++c) out.coords.at(r, c) = s.coords.at(order[r], c);
  }
  return out;
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Hand evaluation of the substrate stack on the complete graph.
std::vector<std::vector<double>> reference_substrate(const ParameterStore& p, const ModelConfig& c,
                                                     const SubstrateRecord& s) {
  const std::size_t m = s.atom_count(), d = c.d;
  const Tensor& ws = p.get(param_names::kSubstrateInput);
  std::vector<std::vector<double>> h(m, std::vector<double>(d, 0.0));
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t f = 0; f < kSubstrateFeatures; ++f) h[j][a] += ws.at(a, f) * s.atoms.at(j, f);
  for (std::size_t l = 0; l < c.substrate_layers; ++l) {
    auto w = [&](const char* leaf) -> const Tensor& { return p.get(param_names::substrate(l, leaf)); };
    std::vector<std::vector<double>> next = h;
    for (std::size_t j = 0; j < m; ++j) {
      std::vector<double> g(d, 0.0);
      for (std::size_t k = 0; k < m; ++k) {
        if (k == j) continue;
        const double dist = distance(s.coords, j, k);
        std::vector<double> hidden(d);
        for (std::size_t a = 0; a < d; ++a) {
          double v = w("msg.b1")[a] + dist * w("msg.w_distance")[a];
          for (std::size_t b = 0; b < d; ++b) v += h[j][b] * w("msg.w_center").at(b, a) + h[k][b] * w("msg.w_neighbor").at(b, a);
          hidden[a] = silu(v);
        }
        for (std::size_t a = 0; a < d; ++a) {
          double v = w("msg.b2")[a];
          for (std::size_t b = 0; b < d; ++b) v += hidden[b] * w("msg.w2").at(b, a);
          g[a] += silu(v);
        }
      }
      std::vector<double> inner(d);
      for (std::size_t a = 0; a < d; ++a) {
        double v = w("gate.b1")[a];
        for (std::size_t b = 0; b < d; ++b) v += g[b] * w("gate.w1").at(b, a);
        inner[a] = std::max(v, 0.0);
      }
      for (std::size_t a = 0; a < d; ++a) {
        double v = w("gate.b2")[a];
        for (std::size_t b = 0; b < d; ++b) v += inner[b] * w("gate.w2").at(b, a);
        next[j][a] += sigmoid(v) * g[a];
      }
    }
    h = next;
  }
  return h;
}

}  // namespace

TEST(SubstrateGraph, CompleteWhenSmall) {
  Rng rng(1);
  const Tensor x = random_tensor({4, 3}, rng);
  EXPECT_EQ(substrate_graph(x, 3), complete_graph(4));
  EXPECT_EQ(substrate_graph(x, 30), complete_graph(4));
}

TEST(SubstrateGraph, NearestWhenLarge) {
  Rng rng(2);
  const Tensor x = random_tensor({12, 3}, rng);
  EXPECT_EQ(substrate_graph(x, 5), knn(x, 5));
}

TEST(SubstrateGraph, EdgeCountMatchesEnumeration) {
  for (std::size_t m = 2; m < 10; ++m) {
    const NeighborGraph g = complete_graph(m);
    EXPECT_EQ(g.flat.size(), m * (m - 1));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j : g.neighbors(i)) EXPECT_NE(i, j);
  }
}

TEST(SubstrateForward, SingleAtomIsInputProjection) {
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 1);
  SubstrateRecord s;
  s.name = "ion";
  s.atoms = Tensor::matrix(1, 5, {1, 0, 2, 0, -1});
  s.coords = Tensor({1, 3});
  Tape t;
  const Tensor h = substrate_forward(t, p, c, s).value();
  const Tensor& ws = p.get(param_names::kSubstrateInput);
  for (std::size_t a = 0; a < c.d; ++a) {
    double expect = 0.0;
    for (std::size_t f = 0; f < 5; ++f) expect += ws.at(a, f) * s.atoms.at(0, f);
    EXPECT_NEAR(h.at(0, a), expect, 1e-15);
  }
}

TEST(SubstrateForward, MatchesHandEvaluation) {
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 3);
  for (auto& [name, t] : p) {
    if (name.rfind("substrate.", 0) != 0) continue;
    Rng rng(std::hash<std::string>{}(name));
    for (double& v : t.data()) v = rng.uniform(-0.5, 0.5);
  }
  Rng rng(4);
  const SubstrateRecord s = random_molecule(4, rng);
  Tape t;
  const Tensor h = substrate_forward(t, p, c, s).value();
  const auto expect = reference_substrate(p, c, s);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t a = 0; a < c.d; ++a) EXPECT_NEAR(h.at(j, a), expect[j][a], 1e-12);
}

TEST(Binding, InvariantToAtomPermutation) {
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 5);
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const SubstrateRecord s = random_molecule(3 + rng.below(8), rng);
    std::vector<std::size_t> order(s.atom_count());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const Tensor he = random_tensor({5, c.d}, rng);
    Tape t;
    const Tensor a = binding_probabilities(t, p, t.constant(he), substrate_forward(t, p, c, s)).value();
    const Tensor b = binding_probabilities(t, p, t.constant(he), substrate_forward(t, p, c, permuted(s, order))).value();
    EXPECT_LT(max_abs_diff(a, b), 1e-12);
  }
}

TEST(Binding, InvariantToRigidMotionOfTheSubstrate) {
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 5);
  Rng rng(7);
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    SubstrateRecord s = random_molecule(6, rng);
    const Tensor he = random_tensor({5, c.d}, rng);
    Tape t;
    const Tensor a = binding_probabilities(t, p, t.constant(he), substrate_forward(t, p, c, s)).value();
    s.coords = random_rigid(trial).apply(s.coords);
    const Tensor b = binding_probabilities(t, p, t.constant(he), substrate_forward(t, p, c, s)).value();
    EXPECT_LT(max_abs_diff(a, b), 1e-9);
  }
}

TEST(Binding, ZeroHeadGivesEvenOdds) {
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 5);
  for (double& v : p.get(param_names::kBinding).data()) v = 0.0;
  Rng rng(8);
  Tape t;
  const Tensor probs = binding_probabilities(t, p, t.constant(random_tensor({4, c.d}, rng)),
                                             substrate_forward(t, p, c, random_molecule(5, rng)))
                           .value();
  EXPECT_DOUBLE_EQ(probs[0], 0.5);
  EXPECT_DOUBLE_EQ(probs[1], 0.5);
}

TEST(Binding, SumPoolingDoublesWithDuplicatedResidues) {
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 5);
  Tensor& wb = p.get(param_names::kBinding);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = c.d; j < 2 * c.d; ++j) wb.at(r, j) = 0.0;
  Rng rng(9);
  const Tensor he = random_tensor({3, c.d}, rng);
  Tensor twice({6, c.d});
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < c.d; ++j) twice.at(i, j) = he.at(i % 3, j);
  const Tensor hs = random_tensor({2, c.d}, rng);
  Tape t;
  const Tensor once = binding_logits(t, p, t.constant(he), t.constant(hs)).value();
  const Tensor doubled = binding_logits(t, p, t.constant(twice), t.constant(hs)).value();
  EXPECT_NEAR(doubled[0], 2 * once[0], 1e-12);
  EXPECT_NEAR(doubled[1], 2 * once[1], 1e-12);
}

TEST(Binding, LabelColumns) {
  EXPECT_EQ(binding_column(1), 0u);
  EXPECT_EQ(binding_column(0), 1u);
}

TEST(Binding, WidthMismatch) {
  const ModelConfig c = small_config();
  ParameterStore p = init_parameters(c, 5);
  Tape t;
  EXPECT_THROW(binding_logits(t, p, t.constant(Tensor({2, 4})), t.constant(Tensor({2, 3}))), DimensionError);
}

TEST(SubstrateRecord, ShapeErrors) {
  SubstrateRecord s;
  s.atoms = Tensor({2, 4});
  s.coords = Tensor({2, 3});
  EXPECT_ANY_THROW(s.validate());
  s.atoms = Tensor({2, 5});
  s.coords = Tensor({3, 3});
  EXPECT_ANY_THROW(s.validate());
}
