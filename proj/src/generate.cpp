#include "enzygen/generate.hpp"

#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

#include "enzygen/amino.hpp"
#include "enzygen/enzyme_model.hpp"
#include "enzygen/errors.hpp"

namespace enzygen {

namespace {

double parse_number(const std::string& text, const std::string& context) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(context + ": bad number '" + text + "'");
  }
  return v;
}

void put_double(std::ostream& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

MotifSpec parse_motif(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("motif file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  static const std::regex header(R"(^\s*length\s+(\d+)\s*,\s*tag\s+(\S+)\s*$)");
  std::smatch m;
  if (!std::regex_match(line, m, header)) {
    throw ParseError("motif header must read 'length N, tag c1.c2.c3.c4', got '" + line + "'");
  }
  MotifSpec spec;
  spec.length = std::stoul(m[1].str());
  spec.ec = m[2].str();
  split_ec_number(spec.ec);
  if (spec.length == 0) throw ParseError("motif length must be positive");

  std::vector<double> xyz;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) f.push_back(field);
    const std::string ctx = "motif line " + std::to_string(lineno);
    if (f.size() != 5) throw ParseError(ctx + ": expected 5 tab-separated fields");
    std::size_t index = 0;
    const auto [ptr, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), index);
    if (ec != std::errc() || ptr != f[0].data() + f[0].size()) throw ParseError(ctx + ": bad index '" + f[0] + "'");
    if (index >= spec.length) throw ParseError(ctx + ": index " + f[0] + " outside length " + std::to_string(spec.length));
    if (!spec.indices.empty() && index <= spec.indices.back()) throw ParseError(ctx + ": indices must increase");
    if (f[1].size() != 1 || !amino_index(f[1][0])) throw ParseError(ctx + ": bad residue '" + f[1] + "'");
    spec.indices.push_back(index);
    spec.residues.push_back(amino_letter(*amino_index(f[1][0])));
    for (int k = 2; k < 5; ++k) xyz.push_back(parse_number(f[k], ctx));
  }
  spec.coords = Tensor({spec.indices.size(), 3}, std::move(xyz));
  return spec;
}

MotifSpec parse_motif(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open motif file " + path.string());
  return parse_motif(in);
}

void write_motif(std::ostream& out, const MotifSpec& motif) {
  out << "length " << motif.length << ", tag " << motif.ec << '\n';
  for (std::size_t k = 0; k < motif.indices.size(); ++k) {
    out << motif.indices[k] << '\t' << motif.residues[k];
    for (std::size_t c = 0; c < 3; ++c) {
      out << '\t';
      put_double(out, motif.coords.at(k, c));
    }
    out << '\n';
  }
}

std::vector<Candidate> generate_candidates(Checkpoint& ckpt, const MotifSpec& motif, std::size_t count,
                                           std::uint64_t seed) {
  EnzymeInput input;
  input.tag = ckpt.tree.lookup(motif.ec);
  input.sequence.assign(motif.length, 0);
  for (std::size_t k = 0; k < motif.indices.size(); ++k) {
    input.sequence[motif.indices[k]] = *amino_index(motif.residues[k]);
  }
  input.motif = motif.indices;
  std::vector<Candidate> out;
  for (std::size_t k = 0; k < count; ++k) {
    Tape tape;
    const NaelOutput res = forward_nael_stack(tape, ckpt.params, ckpt.config, input, motif.coords, seed + k);
    out.push_back({decode_sequence(greedy_decode(res.logits.value(), input.sequence, input.motif)),
                   res.coords.value(), seed + k});
  }
  return out;
}

std::vector<TagEmbedding> tag_embeddings(const Checkpoint& ckpt) {
  std::vector<TagEmbedding> out;
  const std::size_t d = ckpt.config.d;
  for (const ECTag& tag : ckpt.tree.leaves()) {
    TagEmbedding row{ckpt.tree.label(tag), std::vector<double>(d, 0.0)};
    for (std::size_t level = 0; level < kTagLevels; ++level) {
      const Tensor& table = ckpt.params.get(param_names::tag_table(level));
      for (std::size_t j = 0; j < d; ++j) row.values[j] += table.at(tag.levels[level], j);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void write_tag_embeddings(std::ostream& out, const std::vector<TagEmbedding>& rows) {
  for (const auto& r : rows) {
    out << r.label;
    for (double v : r.values) {
      out << '\t';
      put_double(out, v);
    }
    out << '\n';
  }
}

}  // namespace enzygen
