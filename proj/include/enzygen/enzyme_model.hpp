#pragma once

#include <cstdint>
#include <vector>

#include "enzygen/autodiff.hpp"
#include "enzygen/config.hpp"
#include "enzygen/ec_tree.hpp"
#include "enzygen/geometry.hpp"
#include "enzygen/parameters.hpp"

namespace enzygen {

/// Conditioning for one enzyme: residue indices (entries at free positions
/// are ignored), the strictly increasing motif index set and the EC tag.
struct EnzymeInput {
  std::vector<std::size_t> sequence;
  std::vector<std::size_t> motif;
  ECTag tag;

  std::size_t length() const { return sequence.size(); }
  /// mask[i] is true iff i is a motif position.
  std::vector<bool> motif_mask() const;
  std::vector<std::size_t> free_positions() const;
  /// Throws IndexError / ContractError on malformed motif sets.
  void validate() const;
};

/// Per-layer hidden state of the enzyme stack. `anchor` holds the input
/// coordinates x⁰, used when motif coordinates are frozen.
struct EnzymeState {
  Var features;
  Var coords;
  std::vector<std::size_t> motif;
  Tensor anchor;
};

struct NaelOutput {
  Var logits;    // N×20
  Var coords;    // N×3
  Var features;  // N×d
};

/// Optional diagnostics captured during a forward pass.
struct ForwardTrace {
  std::vector<Tensor> attention_probs;  // one N×N per head per attention sub-layer
  std::vector<Tensor> edge_weights;     // one N×K per neighbourhood sub-layer
  std::vector<NeighborGraph> graphs;
};

/// Eq. 6 input embedding: amino-acid row (motif) or mask embedding, plus the
/// four EC-level embeddings and a learned absolute position embedding.
Var embed_inputs(Tape& tape, ParameterStore& params, const ModelConfig& config, const EnzymeInput& input);

/// Post-norm transformer block: LN(FFN(h̃) + h̃), h̃ = LN(MHA(h) + h).
Var global_attention_sublayer(Tape& tape, ParameterStore& params, const ModelConfig& config, std::size_t layer,
                              Var h, ForwardTrace* trace = nullptr);

/// kNN message passing, radial coordinate update and gated feature update.
EnzymeState neighborhood_sublayer(Tape& tape, ParameterStore& params, const ModelConfig& config, std::size_t layer,
                                  const EnzymeState& state, const NeighborGraph& graph, ForwardTrace* trace = nullptr);

/// Runs the interleaved stack from explicit initial coordinates x⁰.
NaelOutput forward_from_initial(Tape& tape, ParameterStore& params, const ModelConfig& config,
                                const EnzymeInput& input, const Tensor& initial_coords, ForwardTrace* trace = nullptr);

/// Full forward pass: spherical initialisation of free residues (seeded),
/// then the stack. `motif_coords` rows follow `input.motif` order.
NaelOutput forward_nael_stack(Tape& tape, ParameterStore& params, const ModelConfig& config,
                              const EnzymeInput& input, const Tensor& motif_coords, std::uint64_t seed,
                              ForwardTrace* trace = nullptr);

/// Motif positions copied from `sequence`, free positions set to the row
/// argmax of `logits` (lowest index wins ties).
std::vector<std::size_t> greedy_decode(const Tensor& logits, const std::vector<std::size_t>& sequence,
                                       const std::vector<std::size_t>& motif);

}  // namespace enzygen
