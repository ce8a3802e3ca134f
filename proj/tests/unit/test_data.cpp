#include <gtest/gtest.h>

#include <cstdio>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "enzygen/amino.hpp"
#include "enzygen/data.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/rng.hpp"

using namespace enzygen;

namespace {

std::string atom_line(const std::string& record, int serial, const std::string& atom, char alt,
                      const std::string& residue, char chain, int seq, double x, double y, double z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%-6s%5d %-4s%c%3s %c%4d    %8.3f%8.3f%8.3f  1.00  0.00", record.c_str(), serial,
                atom.c_str(), alt, residue.c_str(), chain, seq, x, y, z);
  return buf;
}

const WarningSink kQuiet = [](const std::string&) {};

std::string random_sequence(Rng& rng, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s.push_back(kAminoLetters[rng.below(kNumAminoAcids)]);
  return s;
}

// Best (score, matches, length) over every global alignment, by exhaustive recursion.
struct Scored {
  long score;
  std::size_t matches;
  std::size_t length;
};

Scored enumerate_alignments(const std::string& a, const std::string& b, std::size_t i, std::size_t j) {
  if (i == a.size() && j == b.size()) return {0, 0, 0};
  std::vector<Scored> options;
  if (i < a.size() && j < b.size()) {
    Scored s = enumerate_alignments(a, b, i + 1, j + 1);
    const bool match = a[i] == b[j];
    options.push_back({s.score + (match ? 1 : 0), s.matches + (match ? 1 : 0), s.length + 1});
  }
  if (i < a.size()) {
    Scored s = enumerate_alignments(a, b, i + 1, j);
    options.push_back({s.score - 1, s.matches, s.length + 1});
  }
  if (j < b.size()) {
    Scored s = enumerate_alignments(a, b, i, j + 1);
    options.push_back({s.score - 1, s.matches, s.length + 1});
  }
  Scored best = options.front();
  for (const auto& o : options)
    if (o.score > best.score || (o.score == best.score && o.matches > best.matches)) best = o;
  return best;
}

// Connected components of the ≥ threshold graph via depth-first search.
std::vector<std::set<std::string>> component_oracle(const std::vector<SequenceEntry>& records, double threshold) {
  const std::size_t n = records.size();
  std::vector<int> seen(n, 0);
  std::vector<std::set<std::string>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (seen[s]) continue;
    std::set<std::string> comp;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      comp.insert(records[u].id);
      for (std::size_t v = 0; v < n; ++v)
        if (!seen[v] && sequence_identity(records[u].sequence, records[v].sequence) >= threshold) {
          seen[v] = 1;
          stack.push_back(v);
        }
    }
    out.push_back(comp);
  }
  return out;
}

std::string mutate(const std::string& s, Rng& rng, std::size_t edits) {
  std::string out = s;
  for (std::size_t e = 0; e < edits; ++e) out[rng.below(out.size())] = kAminoLetters[rng.below(kNumAminoAcids)];
  return out;
}

}  // namespace

TEST(Pdb, ReadsCalphaOfFirstChain) {
  std::stringstream pdb;
  pdb << "HEADER    TEST\n";
  pdb << atom_line("ATOM", 1, " N", ' ', "MET", 'A', 1, 0, 0, 0) << "\n";
  pdb << atom_line("ATOM", 2, " CA", ' ', "MET", 'A', 1, 1.5, 2.25, -3) << "\n";
  pdb << atom_line("ATOM", 3, " CA", ' ', "GLY", 'A', 2, 4, 5, 6) << "\n";
  pdb << atom_line("HETATM", 4, " CA", ' ', "HOH", 'A', 3, 9, 9, 9) << "\n";
  pdb << atom_line("ATOM", 5, " CA", ' ', "TRP", 'A', 4, 7, 8, 9) << "\n";
  const StructureRecord rec = parse_pdb(pdb, "x", kQuiet);
  EXPECT_EQ(rec.sequence, "MGW");
  EXPECT_DOUBLE_EQ(rec.coords.at(0, 1), 2.25);
  EXPECT_DOUBLE_EQ(rec.coords.at(2, 2), 9.0);
}

TEST(Pdb, AltLocAKeptAndDuplicatesDropped) {
  std::stringstream pdb;
  pdb << atom_line("ATOM", 1, " CA", 'A', "ALA", 'A', 1, 1, 0, 0) << "\n";
  pdb << atom_line("ATOM", 2, " CA", 'B', "ALA", 'A', 1, 2, 0, 0) << "\n";
  pdb << atom_line("ATOM", 3, " CA", 'B', "CYS", 'A', 2, 3, 0, 0) << "\n";
  pdb << atom_line("ATOM", 4, " CA", ' ', "CYS", 'A', 2, 4, 0, 0) << "\n";
  pdb << atom_line("ATOM", 5, " CA", ' ', "CYS", 'A', 2, 5, 0, 0) << "\n";
  const StructureRecord rec = parse_pdb(pdb, "x", kQuiet);
  EXPECT_EQ(rec.sequence, "AC");
  EXPECT_DOUBLE_EQ(rec.coords.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(rec.coords.at(1, 0), 4.0);
}

TEST(Pdb, StopsAtFirstModelEnd) {
  std::stringstream pdb;
  pdb << "MODEL        1\n" << atom_line("ATOM", 1, " CA", ' ', "ALA", 'A', 1, 1, 0, 0) << "\nENDMDL\n";
  pdb << "MODEL        2\n" << atom_line("ATOM", 1, " CA", ' ', "CYS", 'A', 2, 1, 0, 0) << "\nENDMDL\n";
  EXPECT_EQ(parse_pdb(pdb, "x", kQuiet).sequence, "A");
}

TEST(Pdb, UnknownResidueWarnsAndIsSkipped) {
  std::stringstream pdb;
  pdb << atom_line("ATOM", 1, " CA", ' ', "ALA", 'A', 1, 1, 0, 0) << "\n";
  pdb << atom_line("ATOM", 2, " CA", ' ', "UNK", 'A', 2, 1, 0, 0) << "\n";
  pdb << atom_line("ATOM", 3, " CA", ' ', "SER", 'A', 3, 1, 0, 0) << "\n";
  std::vector<std::string> warnings;
  const StructureRecord rec = parse_pdb(pdb, "x", [&](const std::string& w) { warnings.push_back(w); });
  EXPECT_EQ(rec.sequence, "AS");
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("UNK"), std::string::npos);
}

TEST(Pdb, EmptyStructureIsAnError) {
  std::stringstream pdb("HEADER only\nEND\n");
  EXPECT_THROW(parse_pdb(pdb, "x", kQuiet), DataError);
}

TEST(Pdb, MixedChainsMatchLineCountOracle) {
  Rng rng(21);
  const std::vector<std::string> names{"ALA", "GLY", "LYS", "ASP", "PHE"};
  for (int trial = 0; trial < 30; ++trial) {
    std::stringstream pdb;
    std::size_t expected = 0;
    int serial = 1;
    for (char chain : {'A', 'B'}) {
      const int residues = 1 + static_cast<int>(rng.below(12));
      for (int r = 1; r <= residues; ++r) {
        const std::string& res = names[rng.below(names.size())];
        pdb << atom_line("ATOM", serial++, " N", ' ', res, chain, r, 0, 0, 0) << "\n";
        const bool alt_b = rng.below(4) == 0;
        pdb << atom_line("ATOM", serial++, " CA", alt_b ? 'B' : ' ', res, chain, r, r, 0, 0) << "\n";
        if (!alt_b && rng.below(3) == 0) pdb << atom_line("ATOM", serial++, " CA", ' ', res, chain, r, r, 1, 0) << "\n";
        if (chain == 'A' && !alt_b) ++expected;
        pdb << atom_line("HETATM", serial++, " CA", ' ', "HOH", chain, 900 + r, 0, 0, 0) << "\n";
      }
    }
    if (expected == 0) {
      EXPECT_THROW(parse_pdb(pdb, "x", kQuiet), DataError);
    } else {
      EXPECT_EQ(parse_pdb(pdb, "x", kQuiet).sequence.size(), expected) << "trial " << trial;
    }
  }
}

TEST(Tsv, RoundTripIsExact) {
  Rng rng(22);
  StructureRecord a{"a", "ACD", Tensor({3, 3})};
  StructureRecord b{"b", "WY", Tensor({2, 3})};
  for (double& v : a.coords.data()) v = rng.uniform(-100, 100);
  for (double& v : b.coords.data()) v = rng.uniform(-1e-3, 1e-3);
  std::stringstream io;
  write_tsv(io, a);
  write_tsv(io, b);
  const auto back = parse_tsv(io);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
}

TEST(Tsv, MalformedLine) {
  std::stringstream io("a\tA\t1\t2\n");
  EXPECT_THROW(parse_tsv(io), ParseError);
}

TEST(Alignment, IdentityExamples) {
  EXPECT_DOUBLE_EQ(sequence_identity("ACDE", "ACDE"), 1.0);
  EXPECT_DOUBLE_EQ(sequence_identity("AAAA", "CCCC"), 0.0);
  // One deletion: ACDE vs ACE aligns as ACDE / AC-E, 3 matches over 4 columns.
  EXPECT_DOUBLE_EQ(sequence_identity("ACDE", "ACE"), 0.75);
}

TEST(Alignment, MatchesExhaustiveEnumeration) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    for (std::size_t i = 0, n = rng.below(6); i < n; ++i) a.push_back("ACG"[rng.below(3)]);
    for (std::size_t i = 0, n = rng.below(6); i < n; ++i) b.push_back("ACG"[rng.below(3)]);
    const AlignmentStats got = global_alignment(a, b);
    const Scored expect = enumerate_alignments(a, b, 0, 0);
    EXPECT_EQ(got.score, expect.score) << a << " / " << b;
    EXPECT_EQ(got.matches, expect.matches) << a << " / " << b;
  }
}

TEST(Alignment, Symmetric) {
  Rng rng(24);
  for (int trial = 0; trial < 50; ++trial) {
    const std::string a = random_sequence(rng, 5 + rng.below(20));
    const std::string b = mutate(a.substr(rng.below(4)), rng, 3);
    EXPECT_DOUBLE_EQ(sequence_identity(a, b), sequence_identity(b, a));
  }
}

TEST(Clustering, EqualsConnectedComponents) {
  Rng rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SequenceEntry> records;
    for (int f = 0; f < 5; ++f) {
      const std::string root = random_sequence(rng, 30);
      for (int m = 0, n = 1 + static_cast<int>(rng.below(4)); m < n; ++m) {
        records.push_back({"f" + std::to_string(f) + "m" + std::to_string(m), mutate(root, rng, rng.below(20))});
      }
    }
    rng.shuffle(records);
    const auto clusters = cluster_by_identity(records, 0.5);
    std::map<std::size_t, std::set<std::string>> grouped;
    for (std::size_t i = 0; i < records.size(); ++i) grouped[clusters[i]].insert(records[i].id);
    std::set<std::set<std::string>> got;
    for (auto& [_, ids] : grouped) got.insert(ids);
    const auto expect = component_oracle(records, 0.5);
    EXPECT_EQ(got, std::set<std::set<std::string>>(expect.begin(), expect.end()));
  }
}

TEST(Clustering, ChainedLinksMerge) {
  // b is ≥ 50% identical to both a and c, which are not similar to each other.
  const std::vector<SequenceEntry> records{{"a", "AAAAAAAAAA"}, {"b", "AAAAAACCCC"}, {"c", "GGAAAACCCC"}};
  ASSERT_LT(sequence_identity("AAAAAAAAAA", "GGAAAACCCC"), 0.5);
  const auto clusters = cluster_by_identity(records, 0.5);
  EXPECT_EQ(clusters[0], clusters[1]);
  EXPECT_EQ(clusters[1], clusters[2]);
}

TEST(Splits, NeverSeparateSimilarRecords) {
  Rng rng(26);
  std::vector<SequenceEntry> records;
  std::vector<std::pair<std::string, std::string>> planted;
  for (int p = 0; p < 20; ++p) {
    const std::string base = random_sequence(rng, 40);
    records.push_back({"p" + std::to_string(p) + "a", base});
    records.push_back({"p" + std::to_string(p) + "b", mutate(base, rng, 12)});
    planted.emplace_back(records[records.size() - 2].id, records.back().id);
  }
  for (int s = 0; s < 10; ++s) records.push_back({"s" + std::to_string(s), random_sequence(rng, 40)});
  const auto clusters = cluster_by_identity(records, 0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SplitManifest m = assign_splits(records, clusters, {0.2, 0.3}, seed, [](const std::string&) { return true; });
    std::map<std::string, Split> where;
    for (const auto& e : m) where[e.record_id] = e.split;
    for (std::size_t i = 0; i < records.size(); ++i)
      for (std::size_t j = i + 1; j < records.size(); ++j)
        if (sequence_identity(records[i].sequence, records[j].sequence) >= 0.5) {
          EXPECT_EQ(where[records[i].id], where[records[j].id]) << records[i].id << " " << records[j].id;
        }
  }
}

TEST(Splits, IneligibleClustersStayOutOfTest) {
  std::vector<SequenceEntry> records;
  Rng rng(27);
  for (int i = 0; i < 20; ++i) records.push_back({"r" + std::to_string(i), random_sequence(rng, 30)});
  const auto clusters = cluster_by_identity(records, 0.5);
  const SplitManifest m =
      assign_splits(records, clusters, {0.0, 0.5}, 3, [](const std::string& id) { return id.back() == '1'; });
  for (const auto& e : m) {
    if (e.split == Split::kTest) {
      EXPECT_EQ(e.record_id.back(), '1');
    }
  }
}

TEST(Splits, ManifestRoundTrip) {
  const SplitManifest m{{"a", 0, Split::kTrain}, {"b", 1, Split::kValid}, {"c", 1, Split::kTest}};
  std::stringstream io;
  write_split_manifest(io, m);
  EXPECT_EQ(read_split_manifest(io), m);
  EXPECT_THROW(split_from_string("dev"), ParseError);
}

TEST(Substrates, RoundTrip) {
  SubstrateRecord s;
  s.name = "ethanol";
  s.atoms = Tensor::matrix(2, 5, {6, 0, 1, 0, 3, 8, -0.5, 1, 1, 1});
  s.coords = Tensor::matrix(2, 3, {0.1, 0.2, 0.3, -1.25, 2, 1e-7});
  std::stringstream io;
  write_substrate(io, s);
  const SubstrateRecord back = parse_substrate(io);
  EXPECT_EQ(back.name, s.name);
  EXPECT_EQ(back.atoms.values(), s.atoms.values());
  EXPECT_EQ(back.coords.values(), s.coords.values());
}

TEST(Substrates, WrongFieldCount) {
  std::stringstream io("1\tx\n1\t2\t3\n");
  EXPECT_THROW(parse_substrate(io), ParseError);
}

TEST(Pairings, RoundTrip) {
  const std::vector<Pairing> p{{"e1", "s1", 1}, {"e2", "s3", 0}};
  std::stringstream io;
  write_pairings(io, p);
  EXPECT_EQ(read_pairings(io), p);
}

namespace {

struct MiniCorpus {
  std::vector<StructureRecord> structures;
  std::vector<SiteAnnotation> sites;
  std::map<std::string, std::string> ec;
  std::map<std::string, SubstrateRecord> pool;
  std::vector<Pairing> pairings;
  SplitManifest splits;

  Dataset assemble(std::uint64_t seed = 1) const {
    return assemble_dataset(structures, sites, ec, pool, pairings, splits, seed);
  }
};

MiniCorpus mini_corpus() {
  MiniCorpus c;
  for (int i = 0; i < 3; ++i) {
    const std::string id = "e" + std::to_string(i);
    c.structures.push_back({id, "ACDEF", Tensor({5, 3}, static_cast<double>(i))});
    c.sites.push_back({id, {1, 3}, "CE"});
    c.ec[id] = i == 2 ? "2.7.1.1" : "1.1.1.1";
    c.splits.push_back({id, static_cast<std::size_t>(i), Split::kTrain});
  }
  for (const char* name : {"s1", "s2", "s3"}) {
    SubstrateRecord s;
    s.name = name;
    s.atoms = Tensor({2, 5}, 1.0);
    s.coords = Tensor::matrix(2, 3, {0, 0, 0, 1, 0, 0});
    c.pool[name] = s;
  }
  c.pairings = {{"e0", "s2", 0}, {"e0", "s1", 1}, {"e1", "s3", 0}};
  return c;
}

}  // namespace

TEST(Assemble, SubstrateSelectionRules) {
  const Dataset d = mini_corpus().assemble();
  ASSERT_EQ(d.train.size(), 3u);
  EXPECT_EQ(d.train[0].substrate_id, "s1");
  EXPECT_EQ(d.train[0].label, 1);
  EXPECT_EQ(d.train[1].substrate_id, "s3");
  EXPECT_EQ(d.train[1].label, 0);
  EXPECT_FALSE(d.train[1].resample_negative);
  ASSERT_TRUE(d.train[2].substrate_id.has_value());
  EXPECT_EQ(d.train[2].label, 0);
  EXPECT_TRUE(d.train[2].resample_negative);
}

TEST(Assemble, TagsFollowTheTree) {
  const Dataset d = mini_corpus().assemble();
  EXPECT_EQ(d.tree.label(d.train[0].tag), "1.1.1.1");
  EXPECT_EQ(d.tree.label(d.train[2].tag), "2.7.1.1");
  EXPECT_EQ(d.train[0].motif, (std::vector<std::size_t>{1, 3}));
}

TEST(Assemble, NegativesAvoidPositives) {
  const Dataset d = mini_corpus().assemble();
  Rng rng(3);
  for (int k = 0; k < 100; ++k) EXPECT_NE(d.sample_negative("e0", rng), "s1");
}

TEST(Assemble, MissingPiecesAreErrors) {
  {
    MiniCorpus c = mini_corpus();
    c.sites.pop_back();
    EXPECT_THROW(c.assemble(), DataError);
  }
  {
    MiniCorpus c = mini_corpus();
    c.ec.erase("e1");
    EXPECT_THROW(c.assemble(), DataError);
  }
  {
    MiniCorpus c = mini_corpus();
    c.splits.pop_back();
    EXPECT_THROW(c.assemble(), DataError);
  }
  {
    MiniCorpus c = mini_corpus();
    c.sites[0].letters = "CD";
    EXPECT_THROW(c.assemble(), DataError);
  }
}

TEST(Assemble, TestRecordNeedsSubstrate) {
  MiniCorpus c = mini_corpus();
  c.splits[2].split = Split::kTest;
  EXPECT_THROW(c.assemble(), DataError);
  c.pairings.push_back({"e2", "s1", 1});
  const Dataset d = c.assemble();
  ASSERT_EQ(d.test.size(), 1u);
  EXPECT_EQ(d.test[0].id, "e2");
}

TEST(Assemble, SeedFixesSampledNegative) {
  const MiniCorpus c = mini_corpus();
  EXPECT_EQ(c.assemble(5).train[2].substrate_id, c.assemble(5).train[2].substrate_id);
}
