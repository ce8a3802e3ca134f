#pragma once

#include <string>

#include "enzygen/autodiff.hpp"
#include "enzygen/config.hpp"
#include "enzygen/geometry.hpp"
#include "enzygen/parameters.hpp"

namespace enzygen {

inline constexpr std::size_t kSubstrateFeatures = 5;

/// A small molecule: m×5 per-atom chemical features, m×3 coordinates and
/// the binding label y (1 = binds).
struct SubstrateRecord {
  std::string name;
  Tensor atoms;
  Tensor coords;
  int label = 1;

  std::size_t atom_count() const { return atoms.size() == 0 ? 0 : atoms.rows(); }
  /// Throws DimensionError / ContractError on shape violations.
  void validate() const;
};

/// Neighbourhood used for substrate message passing: every other atom when
/// m−1 ≤ K, otherwise the K nearest.
NeighborGraph substrate_graph(const Tensor& coords, std::size_t k);

/// h⁰ = W_s·ĥ, then L_s residual updates h ← h + σ(FFN(g))⊙g with
/// g = Σ_k φ_m(h_j, h_k, ‖x_j − x_k‖). Coordinates stay fixed.
Var substrate_forward(Tape& tape, ParameterStore& params, const ModelConfig& config, const SubstrateRecord& substrate);

/// Pre-softmax binding scores W_b·[Σ_i h_i^enzyme; Σ_j h_j^substrate], shape 1×2.
/// Column 0 is "binds" (y = 1), column 1 is "does not bind" (y = 0).
Var binding_logits(Tape& tape, ParameterStore& params, Var enzyme_features, Var substrate_features);

/// Softmax of binding_logits.
Var binding_probabilities(Tape& tape, ParameterStore& params, Var enzyme_features, Var substrate_features);

/// Column of the binding output that corresponds to label y.
inline std::size_t binding_column(int label) { return label == 1 ? 0 : 1; }

}  // namespace enzygen
