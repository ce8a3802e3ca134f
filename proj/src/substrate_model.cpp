#include "enzygen/substrate_model.hpp"

#include "enzygen/errors.hpp"
#include "enzygen/layers.hpp"

namespace enzygen {

void SubstrateRecord::validate() const {
  if (atoms.rank() != 2 || atoms.dim(1) != kSubstrateFeatures) {
    throw DimensionError("substrate '" + name + "': atom features must be m×5, got " + shape_string(atoms.shape()));
  }
  check_coordinates(coords);
  if (atoms.rows() != coords.rows()) {
    throw DimensionError("substrate '" + name + "': " + std::to_string(atoms.rows()) + " feature rows vs " +
                         std::to_string(coords.rows()) + " coordinate rows");
  }
  if (atoms.rows() < 1) throw ContractError("substrate '" + name + "' has no atoms");
  if (label != 0 && label != 1) throw ContractError("substrate label must be 0 or 1");
}

NeighborGraph substrate_graph(const Tensor& coords, std::size_t k) {
  const std::size_t m = coords.rows();
  if (m < 2) {
    NeighborGraph g;
    g.num_nodes = m;
    return g;
  }
  if (m - 1 <= k) return complete_graph(m);
  return knn(coords, k);
}

Var substrate_forward(Tape& tape, ParameterStore& params, const ModelConfig& config, const SubstrateRecord& substrate) {
  substrate.validate();
  Var h = matmul_nt(tape.constant(substrate.atoms), param(tape, params, param_names::kSubstrateInput));
  const NeighborGraph graph = substrate_graph(substrate.coords, config.k_neighbors);
  // A lone atom has an empty neighbourhood: the aggregate is zero and the
  // gated update leaves h unchanged, so the layers are skipped outright.
  if (graph.degree == 0) return h;

  const auto centers = graph.centers();
  Var coords = tape.constant(substrate.coords);
  Var dist = l2_norm(sub(gather_rows(coords, centers), gather_rows(coords, graph.flat)));
  for (std::size_t l = 0; l < config.substrate_layers; ++l) {
    const std::string prefix = param_names::substrate(l, "");
    Var messages = edge_messages(tape, params, prefix, h, centers, graph.flat, dist);
    Var aggregate = group_sum_rows(messages, graph.degree);
    h = add(h, gated_update(tape, params, prefix, aggregate));
  }
  return h;
}

Var binding_logits(Tape& tape, ParameterStore& params, Var enzyme_features, Var substrate_features) {
  const Tensor& he = enzyme_features.value();
  const Tensor& hs = substrate_features.value();
  if (he.cols() != hs.cols()) {
    throw DimensionError("binding_logits: enzyme width " + std::to_string(he.cols()) + " vs substrate width " +
                         std::to_string(hs.cols()));
  }
  Var pooled = concat_cols({sum_pool(enzyme_features), sum_pool(substrate_features)});
  return matmul_nt(pooled, param(tape, params, param_names::kBinding));
}

Var binding_probabilities(Tape& tape, ParameterStore& params, Var enzyme_features, Var substrate_features) {
  return softmax(binding_logits(tape, params, enzyme_features, substrate_features), 1);
}

}  // namespace enzygen
