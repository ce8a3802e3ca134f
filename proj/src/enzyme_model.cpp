#include "enzygen/enzyme_model.hpp"

#include <algorithm>
#include <cmath>

#include "enzygen/amino.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/layers.hpp"

namespace enzygen {

std::vector<bool> EnzymeInput::motif_mask() const {
  std::vector<bool> mask(sequence.size(), false);
  for (std::size_t i : motif) mask.at(i) = true;
  return mask;
}

std::vector<std::size_t> EnzymeInput::free_positions() const {
  const auto mask = motif_mask();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) out.push_back(i);
  return out;
}

void EnzymeInput::validate() const {
  if (sequence.empty()) throw ContractError("enzyme sequence is empty");
  for (std::size_t r = 0; r < motif.size(); ++r) {
    if (motif[r] >= sequence.size()) {
      throw IndexError("motif index " + std::to_string(motif[r]) + " outside sequence of length " +
                       std::to_string(sequence.size()));
    }
    if (r > 0 && motif[r] <= motif[r - 1]) throw ContractError("motif indices must be strictly increasing");
  }
  for (std::size_t i : motif) {
    if (sequence[i] >= kNumAminoAcids) throw IndexError("motif residue index out of alphabet range");
  }
}

Var embed_inputs(Tape& tape, ParameterStore& params, const ModelConfig& config, const EnzymeInput& input) {
  input.validate();
  const std::size_t n = input.length();
  if (n > config.max_len) {
    throw ConfigError("max_len: sequence length " + std::to_string(n) + " exceeds " + std::to_string(config.max_len));
  }
  const auto mask = input.motif_mask();
  std::vector<std::size_t> residue(n, 0);
  Tensor in_motif({n, 1});
  Tensor not_motif({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      residue[i] = input.sequence[i];
      in_motif[i] = 1.0;
    } else {
      not_motif[i] = 1.0;
    }
  }
  // Free positions carry no residue identity: their amino rows are zeroed by
  // the indicator, so no gradient reaches W_A through them.
  Var amino = mul_col(gather_rows(param(tape, params, param_names::kAmino), residue), tape.constant(std::move(in_motif)));
  Var masked = mul_col(gather_rows(param(tape, params, param_names::kMask), std::vector<std::size_t>(n, 0)),
                       tape.constant(std::move(not_motif)));
  Var h = add(amino, masked);
  for (std::size_t k = 0; k < kTagLevels; ++k) {
    const std::size_t id = input.tag.levels[k];
    const Tensor& table = params.get(param_names::tag_table(k));
    if (id >= table.rows()) {
      throw VocabularyError("EC level " + std::to_string(k + 1) + " index " + std::to_string(id) +
                            " outside vocabulary of size " + std::to_string(table.rows()));
    }
    h = add(h, gather_rows(param(tape, params, param_names::tag_table(k)), std::vector<std::size_t>(n, id)));
  }
  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  return add(h, gather_rows(param(tape, params, param_names::kPosition), positions));
}

Var global_attention_sublayer(Tape& tape, ParameterStore& params, const ModelConfig& config, std::size_t layer,
                              Var h, ForwardTrace* trace) {
  if (config.heads == 0 || config.d % config.heads != 0) {
    throw ConfigError("heads: d=" + std::to_string(config.d) + " not divisible by " + std::to_string(config.heads));
  }
  auto p = [&](const char* leaf) { return param(tape, params, param_names::attention(layer, leaf)); };
  const std::size_t dh = config.head_dim();
  Var q = add_row(matmul(h, p("wq")), p("bq"));
  Var k = add_row(matmul(h, p("wk")), p("bk"));
  Var v = add_row(matmul(h, p("wv")), p("bv"));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  heads.reserve(config.heads);
  for (std::size_t hd = 0; hd < config.heads; ++hd) {
    Var qh = slice_cols(q, hd * dh, dh);
    Var kh = slice_cols(k, hd * dh, dh);
    Var vh = slice_cols(v, hd * dh, dh);
    Var probs = softmax(scale(matmul_nt(qh, kh), inv_sqrt), 1);
    if (trace) trace->attention_probs.push_back(probs.value());
    heads.push_back(matmul(probs, vh));
  }
  Var mha = add_row(matmul(concat_cols(heads), p("wo")), p("bo"));
  Var mid = layer_norm(add(mha, h), p("ln1.gamma"), p("ln1.beta"), config.layer_norm_eps);
  Var ffn = add_row(matmul(relu(add_row(matmul(mid, p("ffn.w1")), p("ffn.b1"))), p("ffn.w2")), p("ffn.b2"));
  return layer_norm(add(ffn, mid), p("ln2.gamma"), p("ln2.beta"), config.layer_norm_eps);
}

EnzymeState neighborhood_sublayer(Tape& tape, ParameterStore& params, const ModelConfig& config, std::size_t layer,
                                  const EnzymeState& state, const NeighborGraph& graph, ForwardTrace* trace) {
  const std::size_t n = state.features.value().rows();
  if (state.coords.value().rows() != n) {
    throw DimensionError("neighborhood_sublayer: " + std::to_string(n) + " feature rows but " +
                         std::to_string(state.coords.value().rows()) + " coordinate rows");
  }
  if (trace) trace->graphs.push_back(graph);
  if (graph.degree == 0) {
    // No neighbours: zero aggregate, gated update and coordinate update vanish.
    if (trace) trace->edge_weights.emplace_back(Shape{n, 0});
    return state;
  }
  if (graph.num_nodes != n) throw DimensionError("neighbour graph does not match the state size");

  const std::string prefix = param_names::neighborhood(layer, "");
  auto p = [&](const std::string& leaf) { return param(tape, params, prefix + leaf); };
  const std::size_t degree = graph.degree;
  const auto centers = graph.centers();

  Var rel = sub(gather_rows(state.coords, centers), gather_rows(state.coords, graph.flat));
  Var dist = l2_norm(rel);
  Var messages = edge_messages(tape, params, prefix, state.features, centers, graph.flat, dist);

  // Softmax of W_a·m + b_a over each node's neighbours.
  Var scores = add_row(matmul(messages, p("attn.w")), p("attn.b"));
  Var weights = reshape(softmax(reshape(scores, {n, degree}), 1), {n * degree, 1});
  if (trace) trace->edge_weights.push_back(Tensor({n, degree}, weights.value().values()));
  Var weighted = mul_col(messages, weights);

  Var edge_scale = add_row(matmul(silu(add_row(matmul(weighted, p("coord.w1")), p("coord.b1"))), p("coord.w2")),
                           p("coord.b2"));
  Var coords = add(state.coords, group_sum_rows(mul_col(rel, edge_scale), degree));
  if (config.freeze_motif_coords && !state.motif.empty()) {
    coords = overwrite_rows(coords, state.motif, state.anchor);
  }

  Var aggregate = group_sum_rows(weighted, degree);
  Var features = add(state.features, gated_update(tape, params, prefix, aggregate));
  // Mutation-testing hook: a probe reading absolute positions breaks
  // invariance on purpose. Absent from every trained checkpoint.
  if (params.contains(prefix + "position_probe")) {
    features = add(features, matmul(state.coords, p("position_probe")));
  }
  return {features, coords, state.motif, state.anchor};
}

NaelOutput forward_from_initial(Tape& tape, ParameterStore& params, const ModelConfig& config,
                                const EnzymeInput& input, const Tensor& initial_coords, ForwardTrace* trace) {
  config.validate();
  check_coordinates(initial_coords);
  if (initial_coords.rows() != input.length()) {
    throw DimensionError("initial coordinates have " + std::to_string(initial_coords.rows()) + " rows for length " +
                         std::to_string(input.length()));
  }
  const std::size_t n = input.length();
  EnzymeState state{embed_inputs(tape, params, config, input), tape.constant(initial_coords), input.motif,
                    initial_coords};

  NeighborGraph frozen;
  if (config.knn_mode == KnnMode::kFrozen && n >= 2) frozen = knn(initial_coords, config.k_neighbors);

  std::size_t nbr_layer = 0;
  for (std::size_t l = 0; l < config.attention_layers; ++l) {
    state.features = global_attention_sublayer(tape, params, config, l, state.features, trace);
    if (!config.neighborhood_after(l)) continue;
    NeighborGraph graph;
    if (n >= 2) graph = config.knn_mode == KnnMode::kFrozen ? frozen : knn(state.coords.value(), config.k_neighbors);
    else graph.num_nodes = n;
    state = neighborhood_sublayer(tape, params, config, nbr_layer++, state, graph, trace);
  }
  Var logits = matmul_nt(state.features, param(tape, params, param_names::kAmino));
  return {logits, state.coords, state.features};
}

NaelOutput forward_nael_stack(Tape& tape, ParameterStore& params, const ModelConfig& config,
                              const EnzymeInput& input, const Tensor& motif_coords, std::uint64_t seed,
                              ForwardTrace* trace) {
  input.validate();
  const Tensor x0 = init_coordinates(input.motif, motif_coords, input.length(), seed, config.radius);
  return forward_from_initial(tape, params, config, input, x0, trace);
}

std::vector<std::size_t> greedy_decode(const Tensor& logits, const std::vector<std::size_t>& sequence,
                                       const std::vector<std::size_t>& motif) {
  const std::size_t n = logits.rows();
  if (logits.cols() != kNumAminoAcids) {
    throw DimensionError("greedy_decode: logits must be N×20, got " + shape_string(logits.shape()));
  }
  if (sequence.size() != n) throw DimensionError("greedy_decode: sequence length differs from logits rows");
  std::vector<bool> fixed(n, false);
  for (std::size_t i : motif) fixed.at(i) = true;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed[i]) {
      out[i] = sequence[i];
      continue;
    }
    std::size_t best = 0;
    for (std::size_t a = 1; a < kNumAminoAcids; ++a)
      if (logits.at(i, a) > logits.at(i, best)) best = a;
    out[i] = best;
  }
  return out;
}

}  // namespace enzygen
