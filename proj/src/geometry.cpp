#include "enzygen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "enzygen/errors.hpp"
#include "enzygen/rng.hpp"

namespace enzygen {

void check_coordinates(const Tensor& coords) {
  if (coords.rank() != 2 || coords.dim(1) != 3) {
    throw DimensionError("coordinates must be N×3, got " + shape_string(coords.shape()));
  }
  if (!coords.all_finite()) throw NumericError("coordinates contain non-finite values");
}

Tensor RigidTransform::rotate(const Tensor& coords) const {
  check_coordinates(coords);
  Tensor out(coords.shape());
  const auto& R = rotation;
  for (std::size_t i = 0; i < coords.rows(); ++i) {
    const double x = coords.at(i, 0), y = coords.at(i, 1), z = coords.at(i, 2);
    out.at(i, 0) = R[0] * x + R[1] * y + R[2] * z;
    out.at(i, 1) = R[3] * x + R[4] * y + R[5] * z;
    out.at(i, 2) = R[6] * x + R[7] * y + R[8] * z;
  }
  return out;
}

Tensor RigidTransform::apply(const Tensor& coords) const {
  Tensor out = rotate(coords);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t c = 0; c < 3; ++c) out.at(i, c) += translation[c];
  return out;
}

double RigidTransform::angle() const {
  const double trace = rotation[0] + rotation[4] + rotation[8];
  return std::acos(std::clamp((trace - 1.0) / 2.0, -1.0, 1.0));
}

double RigidTransform::orthonormality_error() const {
  const auto& R = rotation;
  double err = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += R[k * 3 + a] * R[k * 3 + b];
      err = std::max(err, std::abs(s - (a == b ? 1.0 : 0.0)));
    }
  const double det = R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) +
                     R[2] * (R[3] * R[7] - R[4] * R[6]);
  return std::max(err, std::abs(det - 1.0));
}

RigidTransform random_rigid(std::uint64_t seed) {
  Rng rng(seed, {0x5e3});
  double w = 0, x = 0, y = 0, z = 0, norm = 0;
  do {
    w = rng.normal();
    x = rng.normal();
    y = rng.normal();
    z = rng.normal();
    norm = std::sqrt(w * w + x * x + y * y + z * z);
  } while (norm < 1e-12);
  w /= norm;
  x /= norm;
  y /= norm;
  z /= norm;
  RigidTransform t;
  t.rotation = {1 - 2 * (y * y + z * z), 2 * (x * y - z * w),     2 * (x * z + y * w),
                2 * (x * y + z * w),     1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
                2 * (x * z - y * w),     2 * (y * z + x * w),     1 - 2 * (x * x + y * y)};
  for (auto& c : t.translation) c = rng.uniform(-10.0, 10.0);
  return t;
}

std::vector<std::size_t> NeighborGraph::centers() const {
  std::vector<std::size_t> out(flat.size());
  for (std::size_t e = 0; e < flat.size(); ++e) out[e] = e / degree;
  return out;
}

double distance(const Tensor& coords, std::size_t i, std::size_t j) {
  const double dx = coords.at(i, 0) - coords.at(j, 0);
  const double dy = coords.at(i, 1) - coords.at(j, 1);
  const double dz = coords.at(i, 2) - coords.at(j, 2);
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

NeighborGraph knn(const Tensor& coords, std::size_t k) {
  check_coordinates(coords);
  const std::size_t n = coords.rows();
  if (n < 2) throw ContractError("knn needs at least 2 points, got " + std::to_string(n));
  if (k < 1) throw ParameterError("knn: K must be positive");
  NeighborGraph g;
  g.num_nodes = n;
  g.degree = std::min(k, n - 1);
  g.flat.reserve(n * g.degree);
  std::vector<std::pair<double, std::size_t>> cand;
  cand.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double dx = coords.at(i, 0) - coords.at(j, 0);
      const double dy = coords.at(i, 1) - coords.at(j, 1);
      const double dz = coords.at(i, 2) - coords.at(j, 2);
      cand.emplace_back(dx * dx + dy * dy + dz * dz, j);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(g.degree), cand.end());
    for (std::size_t r = 0; r < g.degree; ++r) g.flat.push_back(cand[r].second);
  }
  return g;
}

NeighborGraph complete_graph(std::size_t n) {
  NeighborGraph g;
  g.num_nodes = n;
  g.degree = n > 0 ? n - 1 : 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) g.flat.push_back(j);
  return g;
}

Tensor init_coordinates(std::span<const std::size_t> motif, const Tensor& motif_coords, std::size_t length,
                        std::uint64_t seed, double radius) {
  if (motif_coords.size() > 0 || !motif.empty()) {
    check_coordinates(motif_coords);
    if (motif_coords.rows() != motif.size()) {
      throw DimensionError("init_coordinates: " + std::to_string(motif.size()) + " motif indices but " +
                           std::to_string(motif_coords.rows()) + " coordinate rows");
    }
  }
  std::vector<int> slot(length, -1);
  for (std::size_t r = 0; r < motif.size(); ++r) {
    if (motif[r] >= length) {
      throw IndexError("init_coordinates: motif index " + std::to_string(motif[r]) + " outside length " +
                       std::to_string(length));
    }
    slot[motif[r]] = static_cast<int>(r);
  }
  Rng rng(seed, {0x1c0});
  Tensor out({length, 3});
  for (std::size_t i = 0; i < length; ++i) {
    if (slot[i] >= 0) {
      for (std::size_t c = 0; c < 3; ++c) out.at(i, c) = motif_coords.at(static_cast<std::size_t>(slot[i]), c);
      continue;
    }
    const double polar = rng.uniform(0.0, std::numbers::pi);
    const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double dir[3] = {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)};
    for (std::size_t c = 0; c < 3; ++c) {
      const double prev = i == 0 ? 0.0 : out.at(i - 1, c);
      out.at(i, c) = prev + radius * dir[c];
    }
  }
  return out;
}

}  // namespace enzygen
