#pragma once

#include <optional>
#include <vector>

#include "enzygen/autodiff.hpp"

namespace enzygen {

/// Phase 1 trains sequence + coordinates only; phase 2 adds binding.
enum class Phase { kStructure = 1, kJoint = 2 };

struct LossBreakdown {
  double seq_nll = 0.0;
  double coord_l2 = 0.0;
  double binding_ce = 0.0;
  double total = 0.0;
};

/// Loss terms still attached to the tape.
struct LossTerms {
  Var seq_nll;
  Var coord_l2;
  Var binding_ce;
  Var total;

  LossBreakdown values() const;
};

/// Optional binding inputs for joint_loss: pre-softmax 1×2 scores and label.
struct BindingTarget {
  Var logits;
  int label = 1;
};

/// −Σ_{i∉M} log P(s_i) + (λ/2) Σ_{i∉M} ‖x_i − x̂_i‖² − log P(y), the last
/// term only in phase 2. total = (seq_nll + coord_l2) + binding_ce.
LossTerms joint_loss(Tape& tape, Var logits, const std::vector<std::size_t>& target_sequence, Var coords_out,
                     const Tensor& target_coords, const std::vector<std::size_t>& motif,
                     const std::optional<BindingTarget>& binding, double lambda_half, Phase phase);

/// Component-wise sum over a batch; total is rebuilt as the sum of the
/// summed components so the logged identity holds exactly.
LossTerms sum_losses(Tape& tape, const std::vector<LossTerms>& parts);

}  // namespace enzygen
