#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "enzygen/config.hpp"
#include "enzygen/ec_tree.hpp"
#include "enzygen/parameters.hpp"

namespace enzygen {

/// Adam first/second moments keyed like the parameters, plus the update count.
struct AdamState {
  ParameterStore m;
  ParameterStore v;
  std::size_t t = 0;
};

struct Checkpoint {
  ModelConfig config;
  ECTree tree;
  ParameterStore params;
  AdamState optimizer;
  /// Completed training steps (phase 1 + phase 2).
  std::size_t step = 0;
  /// Completed masked-LM pretraining steps.
  std::size_t mlm_step = 0;
  std::uint64_t seed = 0;
};

// Binary layout, little-endian throughout:
//   "ENZYGEN1", u32 version, u64 header length, JSON header,
//   u64 entry count, then per entry: u32 name length, name, u32 rank,
//   u64 dims[rank], f64 data[prod(dims)].
// Optimizer moments are stored as entries named "optimizer.m/<param>" and
// "optimizer.v/<param>".
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

/// Writes to a sibling temporary file and renames it into place, so an
/// existing checkpoint is never left half-written.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Fresh checkpoint with random parameters, tag vocabulary taken from `tree`.
Checkpoint fresh_checkpoint(ModelConfig config, ECTree tree, std::uint64_t seed);

}  // namespace enzygen
