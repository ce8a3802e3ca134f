#include "enzygen/site_miner.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "enzygen/amino.hpp"
#include "enzygen/errors.hpp"

namespace enzygen {

void AlignedFamily::validate() const {
  if (rows.size() < 2) {
    throw ParseError("alignment '" + family + "' needs at least 2 rows, got " + std::to_string(rows.size()));
  }
  const std::size_t width = column_count();
  for (const auto& row : rows) {
    if (row.gapped.size() != width) {
      throw ParseError("alignment '" + family + "': row '" + row.id + "' has " + std::to_string(row.gapped.size()) +
                       " columns, expected " + std::to_string(width));
    }
    for (char c : row.gapped) {
      if (!is_gap(c) && !amino_index(c)) {
        throw ParseError("alignment '" + family + "': row '" + row.id + "' has invalid character '" +
                         std::string(1, c) + "'");
      }
    }
  }
}

AlignedFamily read_aligned_fasta(std::istream& in, std::string family) {
  AlignedFamily out;
  out.family = std::move(family);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '>') {
      std::string id = line.substr(1);
      const auto cut = id.find_first_of(" \t");
      if (cut != std::string::npos) id.resize(cut);
      if (id.empty()) throw ParseError("aligned FASTA record with empty id");
      out.rows.push_back({std::move(id), {}});
      continue;
    }
    if (out.rows.empty()) throw ParseError("aligned FASTA: sequence data before the first '>' header");
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      out.rows.back().gapped.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
  }
  out.validate();
  return out;
}

AlignedFamily read_aligned_fasta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open alignment " + path.string());
  try {
    return read_aligned_fasta(in, path.stem().string());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::optional<std::size_t> map_column_to_residue_index(std::string_view row, std::size_t column) {
  if (column >= row.size() || is_gap(row[column])) return std::nullopt;
  std::size_t index = 0;
  for (std::size_t c = 0; c < column; ++c) index += is_gap(row[c]) ? 0 : 1;
  return index;
}

std::vector<ConservedColumn> conserved_columns(const AlignedFamily& family, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw ParameterError("tau must lie in (0, 1], got " + std::to_string(tau));
  }
  family.validate();
  const double needed = tau * static_cast<double>(family.rows.size());
  std::vector<ConservedColumn> out;
  for (std::size_t c = 0; c < family.column_count(); ++c) {
    std::array<std::size_t, kNumAminoAcids> counts{};
    for (const auto& row : family.rows) {
      if (auto a = amino_index(row.gapped[c])) ++counts[*a];
    }
    // Lowest amino index wins a count tie; with tau ≥ 0.5 ties cannot pass.
    std::size_t best = 0;
    for (std::size_t a = 1; a < kNumAminoAcids; ++a) {
      if (counts[a] > counts[best]) best = a;
    }
    if (counts[best] > 0 && static_cast<double>(counts[best]) > needed) {
      out.push_back({c, amino_letter(best), counts[best]});
    }
  }
  return out;
}

std::vector<SiteAnnotation> mine_sites(const AlignedFamily& family, double tau) {
  const auto columns = conserved_columns(family, tau);
  std::vector<SiteAnnotation> out;
  out.reserve(family.rows.size());
  for (const auto& row : family.rows) {
    SiteAnnotation site{row.id, {}, {}};
    for (const auto& col : columns) {
      if (row.gapped[col.column] != col.letter) continue;
      site.indices.push_back(*map_column_to_residue_index(row.gapped, col.column));
      site.letters.push_back(col.letter);
    }
    out.push_back(std::move(site));
  }
  return out;
}

void write_site_manifest(std::ostream& out, const std::vector<SiteAnnotation>& sites) {
  for (const auto& s : sites) {
    out << s.id << '\t';
    for (std::size_t k = 0; k < s.indices.size(); ++k) out << (k ? "," : "") << s.indices[k];
    out << '\t' << s.letters << '\n';
  }
}

std::vector<SiteAnnotation> read_site_manifest(std::istream& in) {
  std::vector<SiteAnnotation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (line.back() == '\t') fields.emplace_back();
    if (fields.size() != 3) throw ParseError("site manifest line " + std::to_string(lineno) + ": expected 3 fields");
    SiteAnnotation s{fields[0], {}, fields[2]};
    std::stringstream idx(fields[1]);
    while (std::getline(idx, field, ',')) {
      try {
        std::size_t used = 0;
        s.indices.push_back(std::stoul(field, &used));
        if (used != field.size()) throw std::invalid_argument(field);
      } catch (const std::exception&) {
        throw ParseError("site manifest line " + std::to_string(lineno) + ": bad index '" + field + "'");
      }
    }
    if (s.indices.size() != s.letters.size()) {
      throw ParseError("site manifest line " + std::to_string(lineno) + ": index and letter counts differ");
    }
    for (std::size_t k = 1; k < s.indices.size(); ++k) {
      if (s.indices[k] <= s.indices[k - 1]) {
        throw ParseError("site manifest line " + std::to_string(lineno) + ": indices not increasing");
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SiteAnnotation> read_site_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open site manifest " + path.string());
  return read_site_manifest(in);
}

}  // namespace enzygen
