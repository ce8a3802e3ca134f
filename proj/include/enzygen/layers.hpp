#pragma once

#include <string>
#include <vector>

#include "enzygen/autodiff.hpp"
#include "enzygen/parameters.hpp"

namespace enzygen {

/// Binds a named parameter onto the tape.
inline Var param(Tape& tape, ParameterStore& params, const std::string& name) {
  return tape.leaf(params.get(name));
}

/// m_e = SiLU(FFN([h_center; h_neighbor; dist])) for every edge e, where FFN
/// is two layers with SiLU after the first. The first layer is evaluated per
/// node and gathered per edge, which equals applying it to the concatenation.
Var edge_messages(Tape& tape, ParameterStore& params, const std::string& prefix, Var features,
                  const std::vector<std::size_t>& centers, const std::vector<std::size_t>& neighbors, Var dist);

/// σ(FFN(g)) ⊙ g with a ReLU two-layer FFN.
Var gated_update(Tape& tape, ParameterStore& params, const std::string& prefix, Var aggregate);

}  // namespace enzygen
