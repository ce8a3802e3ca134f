#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace enzygen {

inline constexpr double kDefaultTau = 0.30;

struct AlignedRow {
  std::string id;
  std::string gapped;  // upper-case; '-' and '.' are gaps
};

/// One family MSA. `family` is a free-form label (the EC number when the
/// family comes from a file named after it).
struct AlignedFamily {
  std::string family;
  std::vector<AlignedRow> rows;

  std::size_t column_count() const { return rows.empty() ? 0 : rows.front().gapped.size(); }
  /// Throws ParseError for < 2 rows, ragged rows or letters outside the alphabet.
  void validate() const;
};

/// Conserved positions of one member, as indices into its ungapped sequence.
struct SiteAnnotation {
  std::string id;
  std::vector<std::size_t> indices;
  std::string letters;
};

struct ConservedColumn {
  std::size_t column = 0;
  char letter = 0;
  std::size_t count = 0;
};

inline bool is_gap(char c) { return c == '-' || c == '.'; }

/// Parses aligned FASTA. Letters are upper-cased; wrapped sequence lines are joined.
AlignedFamily read_aligned_fasta(std::istream& in, std::string family = {});
AlignedFamily read_aligned_fasta(const std::filesystem::path& path);

/// Number of non-gap characters before `column`, or nullopt if the column is a gap.
std::optional<std::size_t> map_column_to_residue_index(std::string_view row, std::size_t column);

/// Columns where one residue letter occurs in more than tau·rows rows.
/// Throws ParameterError unless 0 < tau ≤ 1.
std::vector<ConservedColumn> conserved_columns(const AlignedFamily& family, double tau);

/// Per-member annotation, in row order. A member gets a column only if its
/// letter there equals the column's majority letter.
std::vector<SiteAnnotation> mine_sites(const AlignedFamily& family, double tau = kDefaultTau);

/// `id <tab> i,j,k <tab> LETTERS`, one line per member.
void write_site_manifest(std::ostream& out, const std::vector<SiteAnnotation>& sites);
std::vector<SiteAnnotation> read_site_manifest(std::istream& in);
std::vector<SiteAnnotation> read_site_manifest(const std::filesystem::path& path);

}  // namespace enzygen
