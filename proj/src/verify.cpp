#include "enzygen/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "enzygen/amino.hpp"
#include "enzygen/enzyme_model.hpp"
#include "enzygen/training.hpp"

namespace enzygen {

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.data()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

EnzymeInput random_enzyme_input(const ModelConfig& config, std::size_t length, Rng& rng) {
  EnzymeInput in;
  for (std::size_t i = 0; i < length; ++i) {
    in.sequence.push_back(rng.below(kNumAminoAcids));
    if (rng.uniform() < 1.0 / 3.0) in.motif.push_back(i);
  }
  for (std::size_t k = 0; k < kTagLevels; ++k) in.tag.levels[k] = rng.below(config.tag_vocab[k]);
  return in;
}

SubstrateRecord random_substrate(std::size_t atoms, Rng& rng, int label) {
  SubstrateRecord s;
  s.name = "random";
  s.label = label;
  s.atoms = Tensor({atoms, kSubstrateFeatures});
  for (double& v : s.atoms.data()) v = rng.uniform(-1.0, 1.0);
  s.coords = Tensor({atoms, 3});
  for (double& v : s.coords.data()) v = rng.uniform(-3.0, 3.0);
  return s;
}

EnzymeRecord random_record(const ModelConfig& config, std::size_t length, Rng& rng) {
  EnzymeInput in = random_enzyme_input(config, length, rng);
  EnzymeRecord rec;
  rec.id = "random";
  rec.sequence = in.sequence;
  rec.motif = in.motif;
  rec.tag = in.tag;
  rec.coords = Tensor({length, 3});
  std::array<double, 3> x{0, 0, 0};
  for (std::size_t i = 0; i < length; ++i) {
    double dir[3] = {rng.normal(), rng.normal(), rng.normal()};
    const double n = std::sqrt(dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]);
    for (std::size_t c = 0; c < 3; ++c) {
      if (i > 0) x[c] += kCaCaDistance * dir[c] / n;
      rec.coords.at(i, c) = x[c];
    }
  }
  return rec;
}

std::string EquivarianceReport::worst() const {
  const std::pair<double, const char*> items[] = {{max_feature_dev, "feature invariance"},
                                                  {max_logit_dev, "logit invariance"},
                                                  {max_coord_dev, "coordinate equivariance"},
                                                  {max_substrate_dev, "substrate feature invariance"},
                                                  {max_binding_dev, "binding invariance"}};
  return std::max_element(std::begin(items), std::end(items))->second;
}

EquivarianceReport check_equivariance(ParameterStore& params, const ModelConfig& config, std::size_t length,
                                      std::size_t cases, std::uint64_t seed) {
  EquivarianceReport report;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng(seed, {0xe90, c});
    const EnzymeInput input = random_enzyme_input(config, length, rng);
    Tensor motif_coords({input.motif.size(), 3});
    for (double& v : motif_coords.data()) v = rng.uniform(-15.0, 15.0);
    const Tensor x0 = init_coordinates(input.motif, motif_coords, length, rng.next(), config.radius);
    const RigidTransform g = random_rigid(rng.next());

    Tape tape;
    const NaelOutput a = forward_from_initial(tape, params, config, input, x0);
    const NaelOutput b = forward_from_initial(tape, params, config, input, g.apply(x0));
    report.max_feature_dev = std::max(report.max_feature_dev, max_abs_diff(a.features.value(), b.features.value()));
    report.max_logit_dev = std::max(report.max_logit_dev, max_abs_diff(a.logits.value(), b.logits.value()));
    const Tensor expected = g.apply(a.coords.value());
    const double scale = std::max(1.0, max_abs(expected));
    report.max_coord_dev = std::max(report.max_coord_dev, max_abs_diff(expected, b.coords.value()) / scale);

    // Substrate encoder and binding head under an independent transform.
    SubstrateRecord sub = random_substrate(2 + rng.below(8), rng);
    const Var hs = substrate_forward(tape, params, config, sub);
    SubstrateRecord moved = sub;
    moved.coords = random_rigid(rng.next()).apply(sub.coords);
    const Var hs_moved = substrate_forward(tape, params, config, moved);
    report.max_substrate_dev = std::max(report.max_substrate_dev, max_abs_diff(hs.value(), hs_moved.value()));
    const Tensor pa = binding_probabilities(tape, params, a.features, hs).value();
    const Tensor pb = binding_probabilities(tape, params, b.features, hs_moved).value();
    report.max_binding_dev = std::max(report.max_binding_dev, max_abs_diff(pa, pb));
    ++report.cases;
  }
  return report;
}

GradientReport check_gradients(ParameterStore& params, const ModelConfig& config, std::size_t length,
                               std::size_t per_tensor, std::uint64_t seed, double h, double floor) {
  Rng rng(seed, {0x96a});
  const EnzymeRecord record = random_record(config, length, rng);
  const SubstrateRecord substrate = random_substrate(4, rng, 1);
  const std::uint64_t coord_seed = rng.next();
  auto loss = [&](Tape& tape) {
    return record_loss(tape, params, config, record, &substrate, substrate.label, Phase::kJoint, coord_seed).total;
  };

  params.set_requires_grad(true);
  params.zero_grad();
  {
    Tape tape;
    tape.backward(loss(tape));
  }
  std::map<std::string, std::vector<double>> analytic;
  for (auto& [name, t] : params) analytic[name] = t.grad();
  params.set_requires_grad(false);

  // Pieces of the loss kept apart so each central difference only carries
  // the roundoff of what the parameter actually moves.
  struct Evaluation {
    double seq_nll = 0.0;
    double binding_ce = 0.0;
    Tensor coords;
  };
  auto evaluate = [&]() {
    Tape tape;
    const NaelOutput out =
        forward_nael_stack(tape, params, config, record.input(), record.motif_coords(), coord_seed);
    Var hs = substrate_forward(tape, params, config, substrate);
    const LossTerms terms =
        joint_loss(tape, out.logits, record.sequence, out.coords, record.coords, record.motif,
                   BindingTarget{binding_logits(tape, params, out.features, hs), substrate.label}, config.lambda_half,
                   Phase::kJoint);
    return Evaluation{terms.seq_nll.item(), terms.binding_ce.item(), out.coords.value()};
  };
  std::vector<bool> is_free(record.sequence.size(), true);
  for (std::size_t i : record.motif) is_free[i] = false;
  // |a|² − |b|² = (a − b)·(a + b − 2t) for residuals a = x⁺ − t, b = x⁻ − t,
  // which avoids subtracting two large sums.
  auto coord_difference = [&](const Tensor& up, const Tensor& down) {
    double acc = 0.0;
    for (std::size_t i = 0; i < is_free.size(); ++i) {
      if (!is_free[i]) continue;
      for (std::size_t a = 0; a < 3; ++a) {
        acc += (up.at(i, a) - down.at(i, a)) * (up.at(i, a) + down.at(i, a) - 2.0 * record.coords.at(i, a));
      }
    }
    return config.lambda_half * acc;
  };

  GradientReport report;
  for (auto& [name, t] : params) {
    std::vector<std::size_t> picks(t.size());
    std::iota(picks.begin(), picks.end(), 0);
    Rng pick_rng(seed, {0x96b, report.tensors});
    pick_rng.shuffle(picks);
    picks.resize(std::min(per_tensor, picks.size()));
    double max_diff = 0.0;
    double max_numeric = 0.0;
    for (std::size_t i : picks) {
      const double saved = t[i];
      t[i] = saved + h;
      const Evaluation up = evaluate();
      t[i] = saved - h;
      const Evaluation down = evaluate();
      t[i] = saved;
      const double numeric = ((up.seq_nll - down.seq_nll) + coord_difference(up.coords, down.coords) +
                              (up.binding_ce - down.binding_ce)) /
                             (2.0 * h);
      max_diff = std::max(max_diff, std::abs(analytic[name][i] - numeric));
      max_numeric = std::max(max_numeric, std::abs(numeric));
      ++report.coordinates;
    }
    const double err = max_diff / std::max(max_numeric, floor);
    if (report.worst_tensor.empty() || err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_tensor = name;
    }
    ++report.tensors;
  }
  return report;
}

}  // namespace enzygen
