#include "enzygen/training.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "enzygen/amino.hpp"
#include "enzygen/enzyme_model.hpp"
#include "enzygen/substrate_model.hpp"

namespace enzygen {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5f1;
constexpr std::uint64_t kNegativeStream = 0x4e6;
constexpr std::uint64_t kInitStream = 0x1a17;
constexpr std::uint64_t kMlmBatchStream = 0x313;
constexpr std::uint64_t kMlmMaskStream = 0x31b;
constexpr std::uint64_t kMlmInitStream = 0x31c;
constexpr std::uint64_t kEvalStream = 0xe7a;

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

bool finite(const LossBreakdown& b) {
  return std::isfinite(b.seq_nll) && std::isfinite(b.coord_l2) && std::isfinite(b.binding_ce) &&
         std::isfinite(b.total);
}

void check_parameters(const ParameterStore& params, std::size_t step) {
  for (const auto& [name, t] : params) {
    if (!t.all_finite()) throw TrainingDiverged(step, "parameter '" + name + "' is non-finite");
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw TrainingDiverged(step, "gradient of '" + name + "' is non-finite");
    }
  }
}

// One optimisation step over `batch`; `make_loss` builds each record's terms.
template <typename MakeLoss>
LossBreakdown optimisation_step(ParameterStore& params, AdamState& optimizer, const TrainSchedule& schedule,
                                const std::vector<std::size_t>& batch, std::size_t step, MakeLoss make_loss) {
  params.zero_grad();
  LossBreakdown values;
  try {
    Tape tape;
    std::vector<LossTerms> parts;
    parts.reserve(batch.size());
    for (std::size_t r : batch) parts.push_back(make_loss(tape, r));
    const LossTerms total = sum_losses(tape, parts);
    values = total.values();
    if (!finite(values)) throw TrainingDiverged(step, "loss is non-finite");
    tape.backward(total.total);
  } catch (const TrainingDiverged&) {
    throw;
  } catch (const NumericError& e) {
    throw TrainingDiverged(step, e.what());
  }
  check_parameters(params, step);
  adam_step(params, optimizer, schedule);
  check_parameters(params, step);
  return values;
}

}  // namespace

TrainSchedule TrainSchedule::with_total_steps(std::size_t steps) {
  TrainSchedule s;
  s.phase1_steps = static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(steps)));
  s.phase2_steps = steps - s.phase1_steps;
  return s;
}

void TrainSchedule::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be positive");
  if (batch_residues == 0) throw ConfigError("batch_residues must be positive");
  if (!(mlm_mask_fraction >= 0.0 && mlm_mask_fraction < 1.0)) {
    throw ConfigError("mlm_mask_fraction must lie in [0, 1)");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
}

void adam_step(ParameterStore& params, AdamState& state, const TrainSchedule& schedule) {
  ++state.t;
  const double b1 = schedule.beta1, b2 = schedule.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (auto& [name, p] : params) {
    if (!p.requires_grad() || !p.has_grad()) continue;
    if (!state.m.contains(name)) {
      state.m.add(name, Tensor(p.shape()));
      state.v.add(name, Tensor(p.shape()));
    }
    auto& m = state.m.get(name).values();
    auto& v = state.v.get(name).values();
    const auto& g = p.grad();
    auto& w = p.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      w[i] -= schedule.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + schedule.adam_eps);
    }
  }
}

std::vector<std::vector<std::size_t>> pack_batches(const std::vector<std::size_t>& lengths,
                                                   const std::vector<std::size_t>& order, std::size_t budget) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t used = 0;
  for (std::size_t r : order) {
    const std::size_t len = lengths.at(r);
    if (out.empty() || used + len > budget) {
      out.emplace_back();
      used = 0;
    }
    out.back().push_back(r);
    used += len;
  }
  return out;
}

std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<EnzymeRecord>& records, std::uint64_t seed,
                                                    std::size_t epoch, std::size_t budget) {
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, {kShuffleStream, epoch});
  rng.shuffle(order);
  std::vector<std::size_t> lengths;
  lengths.reserve(records.size());
  for (const auto& r : records) lengths.push_back(r.length());
  return pack_batches(lengths, order, budget);
}

BatchPlan::BatchPlan(const std::vector<EnzymeRecord>& records, std::uint64_t seed, std::size_t budget)
    : records_(&records), seed_(seed), budget_(budget) {
  if (records.empty()) throw DataError("training set is empty");
}

BatchPlan::Position BatchPlan::at(std::size_t step) {
  while (epoch_start_.back() <= step) {
    epochs_.push_back(epoch_batches(*records_, seed_, epochs_.size(), budget_));
    epoch_start_.push_back(epoch_start_.back() + epochs_.back().size());
  }
  std::size_t e = 0;
  while (epoch_start_[e + 1] <= step) ++e;
  return {e, epochs_[e][step - epoch_start_[e]]};
}

std::uint64_t init_seed(std::uint64_t seed, std::size_t step, std::size_t record) {
  return mix_seed(seed, {kInitStream, step, record});
}

LossTerms record_loss(Tape& tape, ParameterStore& params, const ModelConfig& config, const EnzymeRecord& record,
                      const SubstrateRecord* substrate, std::optional<int> label, Phase phase,
                      std::uint64_t coord_seed) {
  const NaelOutput out = forward_nael_stack(tape, params, config, record.input(), record.motif_coords(), coord_seed);
  std::optional<BindingTarget> binding;
  if (phase == Phase::kJoint) {
    if (substrate == nullptr || !label) {
      throw ContractError("record '" + record.id + "' has no substrate for the binding term");
    }
    Var hs = substrate_forward(tape, params, config, *substrate);
    binding = BindingTarget{binding_logits(tape, params, out.features, hs), *label};
  }
  return joint_loss(tape, out.logits, record.sequence, out.coords, record.coords, record.motif, binding,
                    config.lambda_half, phase);
}

std::string format_log_line(const StepLog& entry) {
  std::string line = std::to_string(entry.step);
  for (double v : {entry.loss.seq_nll, entry.loss.coord_l2, entry.loss.binding_ce, entry.loss.total}) {
    line.push_back('\t');
    append_double(line, v);
  }
  return line;
}

StepLog parse_log_line(const std::string& line) {
  std::vector<std::string> f;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, '\t')) f.push_back(field);
  if (f.size() != 5) throw ParseError("loss log line needs 5 fields: '" + line + "'");
  StepLog out;
  auto num = [&](const std::string& s, auto& dst) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), dst);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad loss log value '" + s + "'");
  };
  num(f[0], out.step);
  num(f[1], out.loss.seq_nll);
  num(f[2], out.loss.coord_l2);
  num(f[3], out.loss.binding_ce);
  num(f[4], out.loss.total);
  return out;
}

std::vector<StepLog> read_loss_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open loss log " + path.string());
  std::vector<StepLog> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_log_line(line));
  }
  return out;
}

void train(const Dataset& data, Checkpoint& ckpt, const TrainSchedule& schedule, const TrainHooks& hooks) {
  schedule.validate();
  ckpt.config.validate();
  if (schedule.phase2_steps > 0 && data.substrates.empty()) {
    throw DataError("phase 2 needs a substrate pool");
  }
  ParameterStore& params = ckpt.params;
  params.set_requires_grad(true);
  BatchPlan plan(data.train, schedule.seed, schedule.batch_residues);

  for (std::size_t step = ckpt.step; step < schedule.total_steps(); ++step) {
    const auto pos = plan.at(step);
    const Phase phase = schedule.phase_at(step);
    auto make_loss = [&](Tape& tape, std::size_t r) {
      const EnzymeRecord& rec = data.train[r];
      const SubstrateRecord* substrate = nullptr;
      if (phase == Phase::kJoint && rec.substrate_id) {
        std::string id = *rec.substrate_id;
        if (rec.resample_negative) {
          Rng rng(schedule.seed, {kNegativeStream, pos.epoch, r});
          id = data.sample_negative(rec.id, rng);
        }
        substrate = &data.substrates.at(id);
      }
      return record_loss(tape, params, ckpt.config, rec, substrate, rec.label, phase,
                         init_seed(schedule.seed, step, r));
    };
    const LossBreakdown values = optimisation_step(params, ckpt.optimizer, schedule, pos.batch, step, make_loss);
    ckpt.step = step + 1;
    if (hooks.log) hooks.log(format_log_line({ckpt.step, values}));
    if (hooks.save && schedule.checkpoint_every > 0 && ckpt.step % schedule.checkpoint_every == 0 &&
        ckpt.step != schedule.total_steps()) {
      hooks.save(ckpt);
    }
  }
  params.set_requires_grad(false);
  if (hooks.save) hooks.save(ckpt);
}

std::vector<std::size_t> mlm_mask(const std::vector<std::size_t>& pool, double fraction, Rng& rng) {
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
  std::vector<std::size_t> shuffled = pool;
  rng.shuffle(shuffled);
  shuffled.resize(std::min(count, shuffled.size()));
  std::sort(shuffled.begin(), shuffled.end());
  return shuffled;
}

void mlm_pretrain(const Dataset& data, Checkpoint& ckpt, const TrainSchedule& schedule, const TrainHooks& hooks) {
  schedule.validate();
  ckpt.config.validate();
  ParameterStore& params = ckpt.params;
  params.set_requires_grad(true);
  BatchPlan plan(data.train, mix_seed(schedule.seed, {kMlmBatchStream}), schedule.batch_residues);

  for (std::size_t step = ckpt.mlm_step; step < schedule.mlm_pretrain_steps; ++step) {
    const auto pos = plan.at(step);
    auto make_loss = [&](Tape& tape, std::size_t r) {
      const EnzymeRecord& rec = data.train[r];
      std::vector<std::size_t> pool;
      if (schedule.mlm_respect_motif) {
        pool = rec.input().free_positions();
      } else {
        pool.resize(rec.length());
        std::iota(pool.begin(), pool.end(), 0);
      }
      Rng rng(schedule.seed, {kMlmMaskStream, step, r});
      const auto masked = mlm_mask(pool, schedule.mlm_mask_fraction, rng);
      // Everything not masked is given, exactly like a motif.
      EnzymeRecord view = rec;
      view.motif.clear();
      std::size_t k = 0;
      for (std::size_t i = 0; i < rec.length(); ++i) {
        if (k < masked.size() && masked[k] == i) {
          ++k;
          continue;
        }
        view.motif.push_back(i);
      }
      return record_loss(tape, params, ckpt.config, view, nullptr, std::nullopt, Phase::kStructure,
                         mix_seed(schedule.seed, {kMlmInitStream, step, r}));
    };
    const LossBreakdown values = optimisation_step(params, ckpt.optimizer, schedule, pos.batch, step, make_loss);
    ckpt.mlm_step = step + 1;
    if (hooks.log) hooks.log(format_log_line({ckpt.mlm_step, values}));
    if (hooks.save && schedule.checkpoint_every > 0 && ckpt.mlm_step % schedule.checkpoint_every == 0 &&
        ckpt.mlm_step != schedule.mlm_pretrain_steps) {
      hooks.save(ckpt);
    }
  }
  params.set_requires_grad(false);
  if (hooks.save && schedule.mlm_pretrain_steps > 0) hooks.save(ckpt);
}

RecoveryReport evaluate_recovery(ParameterStore& params, const ModelConfig& config,
                                 const std::vector<EnzymeRecord>& records, std::uint64_t seed) {
  RecoveryReport report;
  double nll = 0.0;
  std::size_t correct = 0;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    Tape tape;
    const NaelOutput out =
        forward_nael_stack(tape, params, config, rec.input(), rec.motif_coords(), mix_seed(seed, {kEvalStream, r}));
    const Tensor log_probs = log_softmax_rows(out.logits).value();
    const auto decoded = greedy_decode(out.logits.value(), rec.sequence, rec.motif);
    for (std::size_t i : rec.input().free_positions()) {
      nll -= log_probs.at(i, rec.sequence[i]);
      correct += decoded[i] == rec.sequence[i] ? 1 : 0;
      ++report.free_residues;
    }
  }
  if (report.free_residues > 0) {
    report.seq_nll_per_residue = nll / static_cast<double>(report.free_residues);
    report.recovery = static_cast<double>(correct) / static_cast<double>(report.free_residues);
  }
  return report;
}

}  // namespace enzygen
