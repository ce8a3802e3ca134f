#pragma once

#include <cstdint>
#include <string>

#include "enzygen/config.hpp"
#include "enzygen/data.hpp"
#include "enzygen/parameters.hpp"
#include "enzygen/substrate_model.hpp"

namespace enzygen {

/// Random residues, a random motif of about a third of the positions and a
/// random tag within the config's vocabulary.
EnzymeInput random_enzyme_input(const ModelConfig& config, std::size_t length, Rng& rng);
/// m atoms with features in [−1, 1] and coordinates in a 6 Å box.
SubstrateRecord random_substrate(std::size_t atoms, Rng& rng, int label = 1);
/// A record with a random-walk Cα trace as target coordinates.
EnzymeRecord random_record(const ModelConfig& config, std::size_t length, Rng& rng);

struct EquivarianceReport {
  std::size_t cases = 0;
  double max_feature_dev = 0.0;     // absolute
  double max_logit_dev = 0.0;       // absolute
  double max_coord_dev = 0.0;       // relative to max(1, max |x|)
  double max_substrate_dev = 0.0;   // absolute
  double max_binding_dev = 0.0;     // absolute, probabilities
  bool within(double tol) const {
    return max_feature_dev <= tol && max_logit_dev <= tol && max_coord_dev <= tol && max_substrate_dev <= tol &&
           max_binding_dev <= tol;
  }
  /// Name of the largest deviation, for failure messages.
  std::string worst() const;
};

/// Runs the stack on x⁰ and on R·x⁰ + t for `cases` random inputs and rigid
/// transforms, comparing features, logits and coordinates; also checks the
/// substrate encoder and binding probabilities under independent transforms.
EquivarianceReport check_equivariance(ParameterStore& params, const ModelConfig& config, std::size_t length,
                                      std::size_t cases, std::uint64_t seed);

struct GradientReport {
  std::size_t tensors = 0;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
};

/// Central differences (step h) of the full phase-2 loss on one random record
/// of `length` residues, at `per_tensor` coordinates of every parameter
/// tensor (all coordinates when fewer). Relative error is taken per tensor:
/// max |analytic − numeric| / max(max |numeric|, floor) over the sampled
/// coordinates, so components far below the tensor's scale are not judged
/// against the finite-difference roundoff.
GradientReport check_gradients(ParameterStore& params, const ModelConfig& config, std::size_t length,
                               std::size_t per_tensor, std::uint64_t seed, double h = 1e-5, double floor = 1e-4);

}  // namespace enzygen
