#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "enzygen/checkpoint.hpp"
#include "enzygen/data.hpp"

namespace enzygen {

/// Conditioning read from a motif file: target length, EC number and the
/// given residues with their Cα coordinates.
struct MotifSpec {
  std::size_t length = 0;
  std::string ec;
  std::vector<std::size_t> indices;
  std::string residues;
  Tensor coords;  // |M|×3, rows follow `indices`
};

/// Header `length N, tag c1.c2.c3.c4`, then `index <tab> residue <tab> x <tab> y <tab> z`.
MotifSpec parse_motif(std::istream& in);
MotifSpec parse_motif(const std::filesystem::path& path);
void write_motif(std::ostream& out, const MotifSpec& motif);

struct Candidate {
  std::string sequence;
  Tensor coords;
  std::uint64_t seed = 0;
};

/// Candidate k uses coordinate-initialisation seed `seed + k` and a greedy
/// decode. Throws VocabularyError when the tag is not in the checkpoint.
std::vector<Candidate> generate_candidates(Checkpoint& ckpt, const MotifSpec& motif, std::size_t count,
                                           std::uint64_t seed);

/// Sum of the four level embeddings for every full tag, in vocabulary order.
struct TagEmbedding {
  std::string label;
  std::vector<double> values;
};
std::vector<TagEmbedding> tag_embeddings(const Checkpoint& ckpt);
void write_tag_embeddings(std::ostream& out, const std::vector<TagEmbedding>& rows);

}  // namespace enzygen
