#include "enzygen/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "enzygen/amino.hpp"
#include "enzygen/errors.hpp"

namespace enzygen {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view text, const std::string& context) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(context + ": bad number '" + t + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view text, const std::string& context) {
  const std::string t = trim(text);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw ParseError(context + ": bad integer '" + t + "'");
  }
  return v;
}

void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

bool getline_clean(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // The smaller root survives, so a cluster's root is its earliest member.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

}  // namespace

void warn_to_stderr(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

StructureRecord parse_pdb(std::istream& in, const std::string& id, const WarningSink& warn) {
  StructureRecord rec{id, {}, {}};
  std::vector<double> xyz;
  std::optional<char> chain;
  std::string last_residue;
  std::string line;
  std::size_t lineno = 0;
  while (getline_clean(in, line)) {
    ++lineno;
    if (line.rfind("ENDMDL", 0) == 0) break;
    if (line.rfind("ATOM  ", 0) != 0 || line.size() < 54) continue;
    const char ch = line[21];
    if (!chain) chain = ch;
    if (ch != *chain) {
      // First chain only: anything after a chain switch is ignored.
      break;
    }
    if (trim(line.substr(12, 4)) != "CA") continue;
    const char alt = line[16];
    if (alt != ' ' && alt != 'A') continue;
    const std::string residue_key = line.substr(22, 5);
    if (residue_key == last_residue) continue;
    const std::string name = trim(line.substr(17, 3));
    const auto letter = three_to_one(name);
    if (!letter) {
      if (warn) warn(id + ": line " + std::to_string(lineno) + ": unknown residue '" + name + "' skipped");
      last_residue = residue_key;
      continue;
    }
    const std::string ctx = id + ": line " + std::to_string(lineno);
    xyz.push_back(parse_double(line.substr(30, 8), ctx));
    xyz.push_back(parse_double(line.substr(38, 8), ctx));
    xyz.push_back(parse_double(line.substr(46, 8), ctx));
    rec.sequence.push_back(*letter);
    last_residue = residue_key;
  }
  if (rec.sequence.empty()) throw DataError(id + ": empty structure (no usable C-alpha atoms)");
  rec.coords = Tensor({rec.sequence.size(), 3}, std::move(xyz));
  return rec;
}

std::vector<StructureRecord> parse_tsv(std::istream& in) {
  std::vector<StructureRecord> out;
  std::vector<double> xyz;
  auto flush = [&]() {
    if (out.empty() || out.back().coords.size() != 0) return;
    out.back().coords = Tensor({out.back().sequence.size(), 3}, std::move(xyz));
    xyz.clear();
  };
  std::string line;
  std::size_t lineno = 0;
  while (getline_clean(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_tabs(line);
    const std::string ctx = "TSV line " + std::to_string(lineno);
    if (f.size() != 5) throw ParseError(ctx + ": expected 5 tab-separated fields, got " + std::to_string(f.size()));
    if (f[1].size() != 1 || !amino_index(f[1][0])) throw ParseError(ctx + ": bad residue letter '" + f[1] + "'");
    if (out.empty() || out.back().id != f[0]) {
      flush();
      for (const auto& r : out) {
        if (r.id == f[0]) throw ParseError(ctx + ": record '" + f[0] + "' is not contiguous");
      }
      out.push_back({f[0], {}, {}});
    }
    out.back().sequence.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(f[1][0]))));
    for (int k = 2; k < 5; ++k) xyz.push_back(parse_double(f[k], ctx));
  }
  flush();
  return out;
}

void write_tsv(std::ostream& out, const StructureRecord& record) {
  if (record.coords.rows() != record.sequence.size()) {
    throw DataError(record.id + ": sequence length and coordinate rows differ");
  }
  for (std::size_t i = 0; i < record.sequence.size(); ++i) {
    out << record.id << '\t' << record.sequence[i];
    for (std::size_t c = 0; c < 3; ++c) {
      out << '\t';
      put_double(out, record.coords.at(i, c));
    }
    out << '\n';
  }
}

std::vector<StructureRecord> parse_ca_coordinates(const std::filesystem::path& path, const WarningSink& warn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open structure file " + path.string());
  const std::string ext = path.extension().string();
  if (ext == ".pdb" || ext == ".ent") return {parse_pdb(in, path.stem().string(), warn)};
  auto records = parse_tsv(in);
  if (records.empty()) throw DataError(path.string() + ": empty structure");
  return records;
}

std::vector<StructureRecord> load_structures(const std::filesystem::path& dir, const WarningSink& warn) {
  std::vector<StructureRecord> out;
  for (const auto& file : sorted_files(dir)) {
    const std::string ext = file.extension().string();
    if (ext != ".pdb" && ext != ".ent" && ext != ".tsv") continue;
    for (auto& r : parse_ca_coordinates(file, warn)) out.push_back(std::move(r));
  }
  return out;
}

AlignmentStats global_alignment(const std::string& a, const std::string& b) {
  // Cells hold (score, matches, length) of the best path, compared on
  // (score, matches).
  struct Cell {
    long score;
    std::size_t matches;
    std::size_t length;
  };
  auto better = [](const Cell& x, const Cell& y) {
    return x.score != y.score ? x.score > y.score : x.matches > y.matches;
  };
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {-static_cast<long>(j), 0, j};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {-static_cast<long>(i), 0, i};
    for (std::size_t j = 1; j <= m; ++j) {
      const bool match = a[i - 1] == b[j - 1];
      Cell best{prev[j - 1].score + (match ? 1 : 0), prev[j - 1].matches + (match ? 1 : 0), prev[j - 1].length + 1};
      const Cell up{prev[j].score - 1, prev[j].matches, prev[j].length + 1};
      const Cell left{cur[j - 1].score - 1, cur[j - 1].matches, cur[j - 1].length + 1};
      if (better(up, best)) best = up;
      if (better(left, best)) best = left;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  return {prev[m].matches, prev[m].length, prev[m].score};
}

double sequence_identity(const std::string& a, const std::string& b) { return global_alignment(a, b).identity(); }

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& text) {
  if (text == "train") return Split::kTrain;
  if (text == "valid") return Split::kValid;
  if (text == "test") return Split::kTest;
  throw ParseError("unknown split '" + text + "' (expected train, valid or test)");
}

std::vector<std::size_t> cluster_by_identity(const std::vector<SequenceEntry>& records, double threshold) {
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return records[x].id < records[y].id; });
  // Union-find over positions in id order.
  DisjointSets sets(n);
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = 0; q < p; ++q) {
      if (sets.find(p) == sets.find(q)) continue;
      if (sequence_identity(records[order[p]].sequence, records[order[q]].sequence) >= threshold) sets.unite(p, q);
    }
  }
  std::vector<std::size_t> label_of_root(n, n);
  std::vector<std::size_t> out(n);
  std::size_t next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t root = sets.find(p);
    if (label_of_root[root] == n) label_of_root[root] = next++;
    out[order[p]] = label_of_root[root];
  }
  return out;
}

SplitManifest assign_splits(const std::vector<SequenceEntry>& records, const std::vector<std::size_t>& clusters,
                            const SplitFractions& fractions, std::uint64_t seed,
                            const std::function<bool(const std::string&)>& test_eligible) {
  if (records.size() != clusters.size()) throw ContractError("assign_splits: one cluster id per record required");
  if (fractions.valid < 0 || fractions.test < 0 || fractions.valid + fractions.test >= 1.0) {
    throw ParameterError("split fractions must be non-negative and sum below 1");
  }
  const std::size_t num_clusters = clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
  std::vector<std::vector<std::size_t>> members(num_clusters);
  for (std::size_t i = 0; i < records.size(); ++i) members[clusters[i]].push_back(i);

  std::vector<std::size_t> order(num_clusters);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, {0x5b1});
  rng.shuffle(order);

  const double total = static_cast<double>(records.size());
  std::vector<Split> split_of(num_clusters, Split::kTrain);
  std::vector<bool> placed(num_clusters, false);
  double test_count = 0;
  for (std::size_t c : order) {
    if (test_count >= fractions.test * total) break;
    if (members[c].empty()) continue;
    const bool ok = std::all_of(members[c].begin(), members[c].end(),
                                [&](std::size_t i) { return !test_eligible || test_eligible(records[i].id); });
    if (!ok) continue;
    split_of[c] = Split::kTest;
    placed[c] = true;
    test_count += static_cast<double>(members[c].size());
  }
  double valid_count = 0;
  for (std::size_t c : order) {
    if (valid_count >= fractions.valid * total) break;
    if (placed[c] || members[c].empty()) continue;
    split_of[c] = Split::kValid;
    placed[c] = true;
    valid_count += static_cast<double>(members[c].size());
  }

  SplitManifest out;
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back({records[i].id, clusters[i], split_of[clusters[i]]});
  std::sort(out.begin(), out.end(), [](const SplitEntry& x, const SplitEntry& y) { return x.record_id < y.record_id; });
  return out;
}

void write_split_manifest(std::ostream& out, const SplitManifest& manifest) {
  for (const auto& e : manifest) out << e.record_id << '\t' << e.cluster_id << '\t' << to_string(e.split) << '\n';
}

SplitManifest read_split_manifest(std::istream& in) {
  SplitManifest out;
  std::string line;
  std::size_t lineno = 0;
  while (getline_clean(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_tabs(line);
    const std::string ctx = "split manifest line " + std::to_string(lineno);
    if (f.size() != 3) throw ParseError(ctx + ": expected 3 fields");
    out.push_back({f[0], parse_count(f[1], ctx), split_from_string(trim(f[2]))});
  }
  return out;
}

SubstrateRecord parse_substrate(std::istream& in) {
  std::string line;
  if (!getline_clean(in, line)) throw ParseError("substrate file is empty");
  const auto header = split_tabs(line);
  if (header.size() != 2 || trim(header[1]).empty()) {
    throw ParseError("substrate header must be '<atom count> <tab> <name>'");
  }
  SubstrateRecord sub;
  sub.name = trim(header[1]);
  const std::size_t m = parse_count(header[0], "substrate '" + sub.name + "' header");
  if (m == 0) throw ParseError("substrate '" + sub.name + "' has no atoms");
  std::vector<double> feats, xyz;
  std::size_t seen = 0;
  while (getline_clean(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_tabs(line);
    const std::string ctx = "substrate '" + sub.name + "' atom " + std::to_string(seen);
    if (f.size() != kSubstrateFeatures + 3) throw ParseError(ctx + ": expected 8 fields");
    for (std::size_t k = 0; k < kSubstrateFeatures; ++k) feats.push_back(parse_double(f[k], ctx));
    for (std::size_t k = kSubstrateFeatures; k < f.size(); ++k) xyz.push_back(parse_double(f[k], ctx));
    ++seen;
  }
  if (seen != m) {
    throw ParseError("substrate '" + sub.name + "': header says " + std::to_string(m) + " atoms, found " +
                     std::to_string(seen));
  }
  sub.atoms = Tensor({m, kSubstrateFeatures}, std::move(feats));
  sub.coords = Tensor({m, 3}, std::move(xyz));
  sub.validate();
  return sub;
}

SubstrateRecord parse_substrate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open substrate file " + path.string());
  return parse_substrate(in);
}

void write_substrate(std::ostream& out, const SubstrateRecord& substrate) {
  substrate.validate();
  out << substrate.atoms.rows() << '\t' << substrate.name << '\n';
  for (std::size_t i = 0; i < substrate.atoms.rows(); ++i) {
    for (std::size_t k = 0; k < kSubstrateFeatures; ++k) {
      if (k) out << '\t';
      put_double(out, substrate.atoms.at(i, k));
    }
    for (std::size_t c = 0; c < 3; ++c) {
      out << '\t';
      put_double(out, substrate.coords.at(i, c));
    }
    out << '\n';
  }
}

std::map<std::string, SubstrateRecord> load_substrates(const std::filesystem::path& dir) {
  std::map<std::string, SubstrateRecord> out;
  for (const auto& file : sorted_files(dir)) {
    auto sub = parse_substrate(file);
    const std::string name = sub.name;
    if (!out.emplace(name, std::move(sub)).second) throw DataError("duplicate substrate name '" + name + "'");
  }
  return out;
}

std::vector<Pairing> read_pairings(std::istream& in) {
  std::vector<Pairing> out;
  std::string line;
  std::size_t lineno = 0;
  while (getline_clean(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_tabs(line);
    const std::string ctx = "pairing manifest line " + std::to_string(lineno);
    if (f.size() != 3) throw ParseError(ctx + ": expected 3 fields");
    const std::string label = trim(f[2]);
    if (label != "0" && label != "1") throw ParseError(ctx + ": label must be 0 or 1");
    out.push_back({f[0], f[1], label == "1" ? 1 : 0});
  }
  return out;
}

void write_pairings(std::ostream& out, const std::vector<Pairing>& pairings) {
  for (const auto& p : pairings) out << p.enzyme_id << '\t' << p.substrate_id << '\t' << p.label << '\n';
}

Tensor EnzymeRecord::motif_coords() const {
  Tensor out({motif.size(), 3});
  for (std::size_t k = 0; k < motif.size(); ++k) {
    for (std::size_t c = 0; c < 3; ++c) out.at(k, c) = coords.at(motif[k], c);
  }
  return out;
}

void EnzymeRecord::validate() const {
  if (sequence.empty()) throw DataError("record '" + id + "' has an empty sequence");
  if (coords.rank() != 2 || coords.rows() != sequence.size() || coords.cols() != 3) {
    throw DataError("record '" + id + "': " + std::to_string(sequence.size()) + " residues but coordinates " +
                    shape_string(coords.shape()));
  }
  if (!coords.all_finite()) throw DataError("record '" + id + "' has non-finite coordinates");
  for (std::size_t k = 0; k < motif.size(); ++k) {
    if (motif[k] >= sequence.size()) throw DataError("record '" + id + "': motif index out of range");
    if (k > 0 && motif[k] <= motif[k - 1]) throw DataError("record '" + id + "': motif indices not increasing");
  }
  for (std::size_t s : sequence) {
    if (s >= kNumAminoAcids) throw DataError("record '" + id + "': residue index out of range");
  }
}

const std::string& Dataset::sample_negative(const std::string& enzyme_id, Rng& rng) const {
  std::vector<const std::string*> candidates;
  const auto pos = positives.find(enzyme_id);
  for (const auto& [name, sub] : substrates) {
    if (pos != positives.end() && pos->second.count(name)) continue;
    candidates.push_back(&name);
  }
  if (candidates.empty()) throw DataError("no negative substrate available for '" + enzyme_id + "'");
  return *candidates[rng.below(candidates.size())];
}

Dataset assemble_dataset(const std::vector<StructureRecord>& structures, const std::vector<SiteAnnotation>& sites,
                         const std::map<std::string, std::string>& ec_numbers,
                         std::map<std::string, SubstrateRecord> substrate_pool,
                         const std::vector<Pairing>& pairings, const SplitManifest& splits, std::uint64_t seed) {
  Dataset ds;
  ds.substrates = std::move(substrate_pool);

  std::map<std::string, const SiteAnnotation*> site_of;
  for (const auto& s : sites) site_of[s.id] = &s;
  std::map<std::string, Split> split_of;
  for (const auto& e : splits) split_of[e.record_id] = e.split;
  std::map<std::string, std::string> first_positive, first_negative;
  for (const auto& p : pairings) {
    if (!ds.substrates.count(p.substrate_id)) {
      throw DataError("pairing references unknown substrate '" + p.substrate_id + "'");
    }
    if (p.label == 1) {
      ds.positives[p.enzyme_id].insert(p.substrate_id);
      first_positive.emplace(p.enzyme_id, p.substrate_id);
    } else {
      first_negative.emplace(p.enzyme_id, p.substrate_id);
    }
  }

  std::vector<std::string> ecs;
  for (const auto& s : structures) {
    const auto ec = ec_numbers.find(s.id);
    if (ec == ec_numbers.end()) throw DataError("record '" + s.id + "' has no EC number");
    ecs.push_back(ec->second);
  }
  std::vector<std::string> sorted_ecs = ecs;
  std::sort(sorted_ecs.begin(), sorted_ecs.end());
  for (const auto& ec : sorted_ecs) ds.tree.add(ec);

  Rng rng(seed, {0x9e9});
  for (std::size_t r = 0; r < structures.size(); ++r) {
    const auto& s = structures[r];
    const auto site = site_of.find(s.id);
    if (site == site_of.end()) throw DataError("record '" + s.id + "' has no site annotation");
    const auto split = split_of.find(s.id);
    if (split == split_of.end()) throw DataError("record '" + s.id + "' has no split entry");

    EnzymeRecord rec;
    rec.id = s.id;
    rec.ec = ecs[r];
    rec.tag = ds.tree.lookup(ecs[r]);
    rec.sequence = encode_sequence(s.sequence);
    rec.coords = s.coords;
    rec.motif = site->second->indices;
    for (std::size_t k = 0; k < rec.motif.size(); ++k) {
      if (rec.motif[k] >= s.sequence.size() || s.sequence[rec.motif[k]] != site->second->letters[k]) {
        throw DataError("record '" + s.id + "': site annotation does not match the structure sequence at index " +
                        std::to_string(rec.motif[k]));
      }
    }
    rec.validate();

    if (auto p = first_positive.find(s.id); p != first_positive.end()) {
      rec.substrate_id = p->second;
      rec.label = 1;
    } else if (auto n = first_negative.find(s.id); n != first_negative.end()) {
      rec.substrate_id = n->second;
      rec.label = 0;
    } else if (split->second == Split::kTrain && !ds.substrates.empty()) {
      rec.substrate_id = ds.sample_negative(s.id, rng);
      rec.label = 0;
      rec.resample_negative = true;
    }
    if (split->second == Split::kTest && !rec.substrate_id) {
      throw DataError("test record '" + s.id + "' has no substrate");
    }
    switch (split->second) {
      case Split::kTrain: ds.train.push_back(std::move(rec)); break;
      case Split::kValid: ds.valid.push_back(std::move(rec)); break;
      case Split::kTest: ds.test.push_back(std::move(rec)); break;
    }
  }
  return ds;
}

std::vector<std::filesystem::path> alignment_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& f : sorted_files(dir)) {
    const std::string ext = f.extension().string();
    if (ext == ".fasta" || ext == ".fa" || ext == ".afa" || ext == ".aln") out.push_back(f);
  }
  return out;
}

std::map<std::string, std::string> ec_numbers_from_alignments(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& file : alignment_files(dir)) {
    const auto family = read_aligned_fasta(file);
    split_ec_number(family.family);  // the stem must be an EC number
    for (const auto& row : family.rows) {
      const auto [it, fresh] = out.emplace(row.id, family.family);
      if (!fresh && it->second != family.family) {
        throw DataError("sequence '" + row.id + "' appears in families " + it->second + " and " + family.family);
      }
    }
  }
  return out;
}

}  // namespace enzygen
