#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "enzygen/ec_tree.hpp"
#include "enzygen/rng.hpp"
#include "enzygen/enzyme_model.hpp"
#include "enzygen/site_miner.hpp"
#include "enzygen/substrate_model.hpp"
#include "enzygen/tensor.hpp"

namespace enzygen {

using WarningSink = std::function<void(const std::string&)>;

/// Writes "warning: <msg>" to stderr.
void warn_to_stderr(const std::string& message);

/// Cα trace of one chain: one-letter sequence and N×3 coordinates.
struct StructureRecord {
  std::string id;
  std::string sequence;
  Tensor coords;

  bool operator==(const StructureRecord&) const = default;
};

/// Cα atoms of the first chain of the first model. altLoc must be blank or
/// 'A'; a residue is taken once even if several Cα lines share its number.
/// Unknown residue names are skipped through `warn`. Throws DataError when
/// no Cα remains.
StructureRecord parse_pdb(std::istream& in, const std::string& id, const WarningSink& warn = warn_to_stderr);

/// Lines `id <tab> letter <tab> x <tab> y <tab> z`; consecutive lines with the
/// same id form one record.
std::vector<StructureRecord> parse_tsv(std::istream& in);
void write_tsv(std::ostream& out, const StructureRecord& record);

/// .pdb/.ent files go through parse_pdb (id = file stem); anything else is TSV.
std::vector<StructureRecord> parse_ca_coordinates(const std::filesystem::path& path,
                                                  const WarningSink& warn = warn_to_stderr);

/// Every structure file in `dir`, visited in file-name order.
std::vector<StructureRecord> load_structures(const std::filesystem::path& dir, const WarningSink& warn = warn_to_stderr);

struct AlignmentStats {
  std::size_t matches = 0;
  std::size_t length = 0;
  long score = 0;
  double identity() const { return length == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(length); }
};

/// Global alignment with match 1, mismatch 0, gap −1. Among optimal-score
/// alignments the one with the most matches is reported.
AlignmentStats global_alignment(const std::string& a, const std::string& b);
double sequence_identity(const std::string& a, const std::string& b);

enum class Split { kTrain, kValid, kTest };
std::string to_string(Split split);
Split split_from_string(const std::string& text);

struct SplitEntry {
  std::string record_id;
  std::size_t cluster_id = 0;
  Split split = Split::kTrain;

  bool operator==(const SplitEntry&) const = default;
};
using SplitManifest = std::vector<SplitEntry>;

struct SequenceEntry {
  std::string id;
  std::string sequence;
};

/// Records are visited in id order. Each record is linked to every earlier
/// record with identity ≥ threshold, and linked clusters are merged, so the
/// result is the connected components of the ≥ threshold graph. Cluster ids
/// are numbered by their first member in id order. Returns one cluster id per
/// input, in input order.
std::vector<std::size_t> cluster_by_identity(const std::vector<SequenceEntry>& records, double threshold = 0.5);

struct SplitFractions {
  double valid = 0.1;
  double test = 0.1;
};

/// Whole clusters go to one split. Clusters are shuffled with `seed`; test is
/// filled first from clusters whose members all satisfy `test_eligible`,
/// then valid, and the rest is train. Entries are sorted by record id.
SplitManifest assign_splits(const std::vector<SequenceEntry>& records, const std::vector<std::size_t>& clusters,
                            const SplitFractions& fractions, std::uint64_t seed,
                            const std::function<bool(const std::string&)>& test_eligible);

void write_split_manifest(std::ostream& out, const SplitManifest& manifest);
SplitManifest read_split_manifest(std::istream& in);

/// Header `m <tab> name`, then m lines of five features and x y z, tab separated.
SubstrateRecord parse_substrate(std::istream& in);
SubstrateRecord parse_substrate(const std::filesystem::path& path);
void write_substrate(std::ostream& out, const SubstrateRecord& substrate);
/// Every file in `dir`, keyed by the name from each header.
std::map<std::string, SubstrateRecord> load_substrates(const std::filesystem::path& dir);

struct Pairing {
  std::string enzyme_id;
  std::string substrate_id;
  int label = 1;

  bool operator==(const Pairing&) const = default;
};
std::vector<Pairing> read_pairings(std::istream& in);
void write_pairings(std::ostream& out, const std::vector<Pairing>& pairings);

/// Model-ready enzyme: sequence, Cα targets, motif, EC tag and optional substrate.
struct EnzymeRecord {
  std::string id;
  std::string ec;
  std::vector<std::size_t> sequence;
  Tensor coords;
  std::vector<std::size_t> motif;
  ECTag tag;
  std::optional<std::string> substrate_id;
  std::optional<int> label;
  /// The substrate is a sampled negative, redrawn every training epoch.
  bool resample_negative = false;

  std::size_t length() const { return sequence.size(); }
  EnzymeInput input() const { return {sequence, motif, tag}; }
  /// Target coordinates at motif rows, in motif order.
  Tensor motif_coords() const;
  /// Throws DataError on any broken invariant.
  void validate() const;
};

struct Dataset {
  ECTree tree;
  std::vector<EnzymeRecord> train;
  std::vector<EnzymeRecord> valid;
  std::vector<EnzymeRecord> test;
  std::map<std::string, SubstrateRecord> substrates;
  /// Known positive substrate ids per enzyme.
  std::map<std::string, std::set<std::string>> positives;

  /// A substrate drawn uniformly from the pool, excluding the enzyme's positives.
  /// Throws DataError when no candidate is left.
  const std::string& sample_negative(const std::string& enzyme_id, Rng& rng) const;
};

/// Joins structures, site annotations, EC numbers, substrates, pairings and
/// splits. A structure missing any of annotation, EC number or split entry,
/// or whose sequence disagrees with its annotation, raises DataError.
/// Records take their first positive pairing (y = 1), else their first
/// listed negative; train records with neither get a seeded random negative.
/// A test record without a substrate raises DataError.
Dataset assemble_dataset(const std::vector<StructureRecord>& structures,
                         const std::vector<SiteAnnotation>& sites,
                         const std::map<std::string, std::string>& ec_numbers,
                         std::map<std::string, SubstrateRecord> substrate_pool,
                         const std::vector<Pairing>& pairings, const SplitManifest& splits, std::uint64_t seed);

/// Row id → EC number, taking the EC number from each alignment file's stem.
std::map<std::string, std::string> ec_numbers_from_alignments(const std::filesystem::path& dir);
/// Every aligned FASTA (.fasta/.fa/.afa/.aln) in `dir`, in file-name order.
std::vector<std::filesystem::path> alignment_files(const std::filesystem::path& dir);

}  // namespace enzygen
