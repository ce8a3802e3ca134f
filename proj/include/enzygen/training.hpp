#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "enzygen/checkpoint.hpp"
#include "enzygen/data.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/losses.hpp"

namespace enzygen {

struct TrainSchedule {
  std::size_t phase1_steps = 100;
  std::size_t phase2_steps = 400;
  double learning_rate = 3e-4;
  std::size_t batch_residues = 8192;
  std::uint64_t seed = 0;
  std::size_t mlm_pretrain_steps = 0;
  double mlm_mask_fraction = 0.20;
  /// Draw masked positions from free positions only.
  bool mlm_respect_motif = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Save every this many steps; 0 saves only at the end.
  std::size_t checkpoint_every = 100;

  std::size_t total_steps() const { return phase1_steps + phase2_steps; }
  Phase phase_at(std::size_t step) const { return step < phase1_steps ? Phase::kStructure : Phase::kJoint; }
  /// Phase 1 takes round(0.2 · steps), the rest is phase 2.
  static TrainSchedule with_total_steps(std::size_t steps);
  void validate() const;
};

/// Thrown when the loss or a parameter becomes non-finite.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(std::size_t step, const std::string& what)
      : NumericError("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// One Adam update over every parameter that has a gradient; moments are
/// created on first use. Increments state.t.
void adam_step(ParameterStore& params, AdamState& state, const TrainSchedule& schedule);

/// Greedy packing in `order`: a batch is closed when the next record would
/// push its residue total past `budget`. A record longer than the budget
/// forms a batch by itself.
std::vector<std::vector<std::size_t>> pack_batches(const std::vector<std::size_t>& lengths,
                                                   const std::vector<std::size_t>& order, std::size_t budget);

/// Batches of one epoch: seeded shuffle of the record indices, then pack_batches.
std::vector<std::vector<std::size_t>> epoch_batches(const std::vector<EnzymeRecord>& records, std::uint64_t seed,
                                                    std::size_t epoch, std::size_t budget);

/// Maps a global step to its (epoch, batch) position.
class BatchPlan {
 public:
  BatchPlan(const std::vector<EnzymeRecord>& records, std::uint64_t seed, std::size_t budget);
  struct Position {
    std::size_t epoch = 0;
    std::vector<std::size_t> batch;
  };
  Position at(std::size_t step);

 private:
  const std::vector<EnzymeRecord>* records_;
  std::uint64_t seed_;
  std::size_t budget_;
  std::vector<std::size_t> epoch_start_{0};
  std::vector<std::vector<std::vector<std::size_t>>> epochs_;
};

/// Seed for the spherical initialisation of one record at one step.
std::uint64_t init_seed(std::uint64_t seed, std::size_t step, std::size_t record);

/// Loss of one record: masked forward pass from spherical initialisation,
/// then joint_loss. `substrate` is needed in phase 2 only.
LossTerms record_loss(Tape& tape, ParameterStore& params, const ModelConfig& config, const EnzymeRecord& record,
                      const SubstrateRecord* substrate, std::optional<int> label, Phase phase,
                      std::uint64_t coord_seed);

struct StepLog {
  std::size_t step = 0;  // 1-based count of completed steps
  LossBreakdown loss;
};

/// `step <tab> seq_nll <tab> coord_l2 <tab> binding_ce <tab> total`, values in
/// shortest round-trip form.
std::string format_log_line(const StepLog& entry);
StepLog parse_log_line(const std::string& line);
std::vector<StepLog> read_loss_log(const std::filesystem::path& path);

struct TrainHooks {
  /// Receives one formatted line per step (without newline).
  std::function<void(const std::string&)> log;
  /// Called at checkpoint_every boundaries and at the end.
  std::function<void(const Checkpoint&)> save;
};

/// Continues `ckpt` from ckpt.step to schedule.total_steps(). Phase 1 records
/// train on sequence and coordinates; phase 2 adds binding against each
/// record's substrate, with sampled negatives redrawn every epoch.
/// Throws TrainingDiverged without saving when a step goes non-finite.
void train(const Dataset& data, Checkpoint& ckpt, const TrainSchedule& schedule, const TrainHooks& hooks);

/// Positions masked in one MLM draw: round(fraction · pool) distinct indices
/// from `pool`, sorted.
std::vector<std::size_t> mlm_mask(const std::vector<std::size_t>& pool, double fraction, Rng& rng);

/// Masked-LM pretraining from ckpt.mlm_step to schedule.mlm_pretrain_steps.
/// Each draw masks positions (identity → mask embedding, coordinates →
/// spherical re-initialisation) and the loss is seq_nll + coord_l2 over the
/// masked positions.
void mlm_pretrain(const Dataset& data, Checkpoint& ckpt, const TrainSchedule& schedule, const TrainHooks& hooks);

struct RecoveryReport {
  double seq_nll_per_residue = 0.0;
  double recovery = 0.0;
  std::size_t free_residues = 0;
};

/// Teacher-forced NLL per free residue and greedy-decode recovery.
RecoveryReport evaluate_recovery(ParameterStore& params, const ModelConfig& config,
                                 const std::vector<EnzymeRecord>& records, std::uint64_t seed);

}  // namespace enzygen
