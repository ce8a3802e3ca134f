#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "enzygen/errors.hpp"
#include "enzygen/geometry.hpp"
#include "test_support.hpp"

using namespace enzygen;
using enzygen::testing::random_tensor;

namespace {

// All-pairs oracle: sort every other node by (squared distance, index).
std::vector<std::size_t> brute_force_neighbors(const Tensor& x, std::size_t i, std::size_t k) {
  const std::size_t n = x.rows();
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    double d = 0.0;
    for (std::size_t c = 0; c < 3; ++c) d += (x.at(i, c) - x.at(j, c)) * (x.at(i, c) - x.at(j, c));
    all.emplace_back(d, j);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < std::min(k, n - 1); ++r) out.push_back(all[r].second);
  return out;
}

}  // namespace

TEST(RigidTransform, RandomRotationsAreOrthonormal) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    EXPECT_LT(random_rigid(s).orthonormality_error(), 1e-12);
  }
}

TEST(RigidTransform, TranslationWithinTenAngstrom) {
  for (std::uint64_t s = 0; s < 200; ++s) {
    for (double t : random_rigid(s).translation) EXPECT_LE(std::abs(t), 10.0);
  }
}

TEST(RigidTransform, HaarMeanRotationAngle) {
  // Angle density on SO(3) under Haar measure is (1 − cos θ)/π, so the mean
  // is π/2 + 2/π and the variance is π²/3 + 2 − mean².
  const std::size_t n = 20000;
  double sum = 0.0;
  for (std::size_t s = 0; s < n; ++s) sum += random_rigid(s).angle();
  const double mean = std::numbers::pi / 2 + 2 / std::numbers::pi;
  const double var = std::numbers::pi * std::numbers::pi / 3 + 2 - mean * mean;
  EXPECT_NEAR(sum / n, mean, 4.0 * std::sqrt(var / n));
}

TEST(RigidTransform, ApplyPreservesDistances) {
  Rng rng(3);
  Tensor x = random_tensor({6, 3}, rng, -5, 5);
  Tensor y = random_rigid(9).apply(x);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_NEAR(distance(x, i, j), distance(y, i, j), 1e-12);
}

TEST(Knn, MatchesBruteForceOnRandomSets) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    const std::size_t k = 1 + rng.below(35);
    Tensor x({n, 3});
    // Half the sets live on a small integer grid to force distance ties.
    const bool grid = trial % 2 == 0;
    for (double& v : x.data()) v = grid ? static_cast<double>(rng.below(3)) : rng.uniform(-20, 20);
    const NeighborGraph g = knn(x, k);
    ASSERT_EQ(g.degree, std::min(k, n - 1));
    for (std::size_t i = 0; i < n; ++i) {
      const auto got = g.neighbors(i);
      EXPECT_EQ(std::vector<std::size_t>(got.begin(), got.end()), brute_force_neighbors(x, i, k))
          << "trial " << trial << " node " << i;
    }
  }
}

TEST(Knn, ClampsToAllOthers) {
  Tensor x = Tensor::matrix(3, 3, {0, 0, 0, 1, 0, 0, 5, 0, 0});
  const NeighborGraph g = knn(x, 30);
  EXPECT_EQ(g.degree, 2u);
  EXPECT_EQ(g.neighbors(2)[0], 1u);
  EXPECT_EQ(g.neighbors(2)[1], 0u);
}

TEST(Knn, TiesGoToLowerIndex) {
  Tensor x = Tensor::matrix(3, 3, {0, 0, 0, 1, 0, 0, -1, 0, 0});
  EXPECT_EQ(knn(x, 1).neighbors(0)[0], 1u);
}

TEST(Knn, Errors) {
  EXPECT_THROW(knn(Tensor({1, 3}), 3), ContractError);
  EXPECT_THROW(knn(Tensor({4, 3}), 0), ParameterError);
  EXPECT_THROW(knn(Tensor({4, 2}), 1), DimensionError);
}

TEST(Knn, InvariantUnderRigidMotion) {
  Rng rng(5);
  Tensor x = random_tensor({20, 3}, rng, -10, 10);
  EXPECT_EQ(knn(x, 6), knn(random_rigid(1).apply(x), 6));
}

TEST(InitCoordinates, FreeResiduesSitOnTheSphereAroundTheirPredecessor) {
  const std::vector<std::size_t> motif{2, 7};
  Tensor motif_coords = Tensor::matrix(2, 3, {10, 0, 0, -4, 3, 1});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor x = init_coordinates(motif, motif_coords, 12, seed);
    EXPECT_NEAR(std::sqrt(x.at(0, 0) * x.at(0, 0) + x.at(0, 1) * x.at(0, 1) + x.at(0, 2) * x.at(0, 2)), 3.75,
                1e-12);
    for (std::size_t i = 1; i < 12; ++i) {
      if (i == 2 || i == 7) continue;
      EXPECT_NEAR(distance(x, i, i - 1), 3.75, 1e-12);
    }
  }
}

TEST(InitCoordinates, MotifRowsCopiedVerbatim) {
  const std::vector<std::size_t> motif{0, 3};
  Tensor motif_coords = Tensor::matrix(2, 3, {1.5, -2.25, 3, 0.125, 7, -9});
  const Tensor x = init_coordinates(motif, motif_coords, 5, 4);
  for (std::size_t c = 0; c < 3; ++c) {
    EXPECT_EQ(x.at(0, c), motif_coords.at(0, c));
    EXPECT_EQ(x.at(3, c), motif_coords.at(1, c));
  }
}

TEST(InitCoordinates, AngleStatistics) {
  // Polar angle ~ U(0, π) and azimuth ~ U(0, 2π), recovered from each step.
  const std::size_t length = 400;
  double polar_sum = 0.0;
  double azimuth_sum = 0.0;
  std::size_t count = 0;
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Tensor x = init_coordinates({}, Tensor(), length, seed);
    for (std::size_t i = 1; i < length; ++i) {
      const double dx = x.at(i, 0) - x.at(i - 1, 0);
      const double dy = x.at(i, 1) - x.at(i - 1, 1);
      const double dz = x.at(i, 2) - x.at(i - 1, 2);
      polar_sum += std::acos(std::clamp(dz / 3.75, -1.0, 1.0));
      double az = std::atan2(dy, dx);
      if (az < 0) az += 2 * std::numbers::pi;
      azimuth_sum += az;
      ++count;
    }
  }
  const double pi = std::numbers::pi;
  EXPECT_NEAR(polar_sum / count, pi / 2, 4.0 * std::sqrt(pi * pi / 12 / count));
  EXPECT_NEAR(azimuth_sum / count, pi, 4.0 * std::sqrt(4 * pi * pi / 12 / count));
}

TEST(InitCoordinates, SeedDeterminesOutput) {
  EXPECT_EQ(init_coordinates({}, Tensor(), 10, 3).values(), init_coordinates({}, Tensor(), 10, 3).values());
  EXPECT_NE(init_coordinates({}, Tensor(), 10, 3).values(), init_coordinates({}, Tensor(), 10, 4).values());
}

TEST(InitCoordinates, Errors) {
  EXPECT_THROW(init_coordinates(std::vector<std::size_t>{5}, Tensor({1, 3}), 4, 0), IndexError);
  EXPECT_THROW(init_coordinates(std::vector<std::size_t>{1, 2}, Tensor({1, 3}), 4, 0), DimensionError);
}
