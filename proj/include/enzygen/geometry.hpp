#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "enzygen/tensor.hpp"

namespace enzygen {

/// Mean Cα–Cα distance between consecutive residues, in Ångström.
inline constexpr double kCaCaDistance = 3.75;

/// Throws DimensionError unless `coords` is N×3, NumericError on non-finite entries.
void check_coordinates(const Tensor& coords);

struct RigidTransform {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> translation{0, 0, 0};

  /// R·x + t applied to every row of an N×3 tensor.
  Tensor apply(const Tensor& coords) const;
  /// R·x only (for direction vectors).
  Tensor rotate(const Tensor& coords) const;
  /// Rotation angle in radians.
  double angle() const;
  /// max |RᵀR − I| and |det R − 1|.
  double orthonormality_error() const;
};

/// Uniform rotation from SO(3) via a normalised Gaussian quaternion, with
/// translation components uniform in [-10, 10] Å.
RigidTransform random_rigid(std::uint64_t seed);

// Fixed-degree neighbour lists: every node has exactly `degree` neighbours,
// stored contiguously in `flat` in ascending (distance, index) order.
struct NeighborGraph {
  std::size_t num_nodes = 0;
  std::size_t degree = 0;
  std::vector<std::size_t> flat;

  std::span<const std::size_t> neighbors(std::size_t i) const {
    return {flat.data() + i * degree, degree};
  }
  /// Centre index for every edge, aligned with `flat`.
  std::vector<std::size_t> centers() const;

  bool operator==(const NeighborGraph&) const = default;
};

/// K nearest other nodes by Euclidean distance; K is clamped to N−1, ties go
/// to the lower index. Throws ContractError for N < 2, ParameterError for K < 1.
NeighborGraph knn(const Tensor& coords, std::size_t k);

/// Every j ≠ i, in index order.
NeighborGraph complete_graph(std::size_t n);

/// Initial Cα trace: motif rows copied verbatim, every free residue placed on
/// the 3.75 Å sphere around its predecessor (the origin for residue 0) with
/// polar angle ~ U(0, π) and azimuth ~ U(0, 2π).
Tensor init_coordinates(std::span<const std::size_t> motif, const Tensor& motif_coords, std::size_t length,
                        std::uint64_t seed, double radius = kCaCaDistance);

double distance(const Tensor& coords, std::size_t i, std::size_t j);

}  // namespace enzygen
