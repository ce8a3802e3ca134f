#include "enzygen/losses.hpp"

#include "enzygen/amino.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/substrate_model.hpp"

namespace enzygen {

LossBreakdown LossTerms::values() const {
  return {seq_nll.item(), coord_l2.item(), binding_ce.item(), total.item()};
}

LossTerms joint_loss(Tape& tape, Var logits, const std::vector<std::size_t>& target_sequence, Var coords_out,
                     const Tensor& target_coords, const std::vector<std::size_t>& motif,
                     const std::optional<BindingTarget>& binding, double lambda_half, Phase phase) {
  const std::size_t n = target_sequence.size();
  if (logits.value().rows() != n || logits.value().cols() != kNumAminoAcids) {
    throw DimensionError("joint_loss: logits " + shape_string(logits.value().shape()) + " for length " +
                         std::to_string(n));
  }
  if (coords_out.value().rows() != n || target_coords.rows() != n) {
    throw DimensionError("joint_loss: coordinate rows do not match sequence length");
  }
  std::vector<bool> fixed(n, false);
  for (std::size_t i : motif) fixed.at(i) = true;
  std::vector<std::size_t> free;
  std::vector<std::size_t> targets;
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) continue;
    if (target_sequence[i] >= kNumAminoAcids) throw IndexError("joint_loss: target residue out of range");
    free.push_back(i);
    targets.push_back(target_sequence[i]);
  }

  LossTerms terms;
  if (free.empty()) {
    terms.seq_nll = tape.constant(Tensor::scalar(0.0));
    terms.coord_l2 = tape.constant(Tensor::scalar(0.0));
  } else {
    terms.seq_nll = sub(tape.constant(Tensor::scalar(0.0)), sum(pick(log_softmax_rows(logits), free, targets)));
    Var residual = sub(gather_rows(coords_out, free), gather_rows(tape.constant(target_coords), free));
    terms.coord_l2 = scale(sum(square(residual)), lambda_half);
  }

  if (phase == Phase::kJoint) {
    if (!binding) throw ContractError("joint_loss: phase 2 needs a binding target");
    const std::size_t column = binding_column(binding->label);
    Var log_probs = log_softmax_rows(binding->logits);
    terms.binding_ce = sub(tape.constant(Tensor::scalar(0.0)), sum(pick(log_probs, {0}, {column})));
  } else {
    terms.binding_ce = tape.constant(Tensor::scalar(0.0));
  }
  terms.total = add(add(terms.seq_nll, terms.coord_l2), terms.binding_ce);
  return terms;
}

LossTerms sum_losses(Tape& tape, const std::vector<LossTerms>& parts) {
  if (parts.empty()) {
    Var zero = tape.constant(Tensor::scalar(0.0));
    return {zero, zero, zero, add(add(zero, zero), zero)};
  }
  LossTerms acc = parts.front();
  for (std::size_t k = 1; k < parts.size(); ++k) {
    acc.seq_nll = add(acc.seq_nll, parts[k].seq_nll);
    acc.coord_l2 = add(acc.coord_l2, parts[k].coord_l2);
    acc.binding_ce = add(acc.binding_ce, parts[k].binding_ce);
  }
  acc.total = add(add(acc.seq_nll, acc.coord_l2), acc.binding_ce);
  return acc;
}

}  // namespace enzygen
