#include "enzygen/amino.hpp"

#include <cctype>

#include "enzygen/errors.hpp"

namespace enzygen {

namespace {

constexpr std::array<std::string_view, kNumAminoAcids> kThreeLetter = {
    "ALA", "CYS", "ASP", "GLU", "PHE", "GLY", "HIS", "ILE", "LYS", "LEU",
    "MET", "ASN", "PRO", "GLN", "ARG", "SER", "THR", "VAL", "TRP", "TYR"};

}  // namespace

std::optional<std::size_t> amino_index(char letter) {
  const char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
  const auto pos = kAminoLetters.find(upper);
  if (pos == std::string_view::npos) return std::nullopt;
  return pos;
}

char amino_letter(std::size_t index) {
  if (index >= kNumAminoAcids) throw IndexError("amino acid index out of range: " + std::to_string(index));
  return kAminoLetters[index];
}

std::optional<char> three_to_one(std::string_view residue_name) {
  for (std::size_t i = 0; i < kThreeLetter.size(); ++i) {
    if (kThreeLetter[i] == residue_name) return kAminoLetters[i];
  }
  return std::nullopt;
}

std::string one_to_three(char letter) {
  const auto idx = amino_index(letter);
  if (!idx) throw ParseError(std::string("unknown residue letter '") + letter + "'");
  return std::string(kThreeLetter[*idx]);
}

std::vector<std::size_t> encode_sequence(std::string_view sequence) {
  std::vector<std::size_t> out;
  out.reserve(sequence.size());
  for (char c : sequence) {
    const auto idx = amino_index(c);
    if (!idx) throw ParseError(std::string("unknown residue letter '") + c + "'");
    out.push_back(*idx);
  }
  return out;
}

std::string decode_sequence(const std::vector<std::size_t>& indices) {
  std::string out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(amino_letter(i));
  return out;
}

}  // namespace enzygen
