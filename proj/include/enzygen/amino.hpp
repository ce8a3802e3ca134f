#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace enzygen {

inline constexpr std::size_t kNumAminoAcids = 20;

/// One-letter codes of the 20 standard amino acids, in index order.
inline constexpr std::string_view kAminoLetters = "ACDEFGHIKLMNPQRSTVWY";

std::optional<std::size_t> amino_index(char letter);
char amino_letter(std::size_t index);

/// Maps a three-letter residue name (e.g. "ALA") to its one-letter code.
std::optional<char> three_to_one(std::string_view residue_name);
std::string one_to_three(char letter);

/// Throws ParseError on any letter outside the 20-letter alphabet.
std::vector<std::size_t> encode_sequence(std::string_view sequence);
std::string decode_sequence(const std::vector<std::size_t>& indices);

}  // namespace enzygen
