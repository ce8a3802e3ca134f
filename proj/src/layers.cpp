#include "enzygen/layers.hpp"

namespace enzygen {

Var edge_messages(Tape& tape, ParameterStore& params, const std::string& prefix, Var features,
                  const std::vector<std::size_t>& centers, const std::vector<std::size_t>& neighbors, Var dist) {
  auto p = [&](const char* leaf) { return param(tape, params, prefix + leaf); };
  Var center_part = gather_rows(matmul(features, p("msg.w_center")), centers);
  Var neighbor_part = gather_rows(matmul(features, p("msg.w_neighbor")), neighbors);
  Var hidden = add_row(add(add(center_part, neighbor_part), matmul(dist, p("msg.w_distance"))), p("msg.b1"));
  return silu(add_row(matmul(silu(hidden), p("msg.w2")), p("msg.b2")));
}

Var gated_update(Tape& tape, ParameterStore& params, const std::string& prefix, Var aggregate) {
  auto p = [&](const char* leaf) { return param(tape, params, prefix + leaf); };
  Var gate = sigmoid(add_row(matmul(relu(add_row(matmul(aggregate, p("gate.w1")), p("gate.b1"))), p("gate.w2")),
                             p("gate.b2")));
  return mul(gate, aggregate);
}

}  // namespace enzygen
