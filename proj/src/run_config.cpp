#include "enzygen/run_config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "enzygen/errors.hpp"

namespace enzygen {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// Accepted keys and their defaults, in documentation order.
const std::vector<std::pair<std::string, std::string>>& key_table() {
  static const std::vector<std::pair<std::string, std::string>> table = {
      {"d", "64"},
      {"heads", "4"},
      {"attention_layers", "6"},
      {"interleave_period", "2"},
      {"substrate_layers", "3"},
      {"k_neighbors", "30"},
      {"ffn_multiplier", "4"},
      {"max_len", "256"},
      {"lambda_half", "1.0"},
      {"radius", "3.75"},
      {"layer_norm_eps", "1e-05"},
      {"coord_init_gain", "0.001"},
      {"knn_mode", "dynamic"},
      {"freeze_motif_coords", "false"},
      {"steps", "500"},
      {"phase1_steps", "auto"},
      {"learning_rate", "0.0003"},
      {"batch_residues", "8192"},
      {"seed", "0"},
      {"mlm_pretrain_steps", "0"},
      {"mlm_mask_fraction", "0.2"},
      {"mlm_respect_motif", "false"},
      {"checkpoint_every", "100"},
      {"identity_threshold", "0.5"},
      {"valid_fraction", "0.1"},
      {"test_fraction", "0.1"},
      {"structures", ""},
      {"alignments", ""},
      {"sites", ""},
      {"substrates", ""},
      {"pairings", ""},
      {"splits", ""},
      {"checkpoint", "model.ckpt"},
      {"loss_log", "loss.log"},
      {"resume", "false"},
  };
  return table;
}

}  // namespace

std::vector<std::string> run_config_keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : key_table()) out.push_back(k);
  return out;
}

std::string default_run_config_text() {
  std::string out;
  for (const auto& [k, v] : key_table()) out += k + " = " + v + "\n";
  return out;
}

RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> values;
  for (const auto& [k, v] : key_table()) values[k] = v;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    if (!values.count(key)) throw ConfigError("unknown key '" + key + "' (line " + std::to_string(lineno) + ")");
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'");
    values[key] = trim(line.substr(eq + 1));
  }

  auto size = [&](const char* k) { return to_size(k, values.at(k)); };
  auto real = [&](const char* k) { return to_double(k, values.at(k)); };
  auto flag = [&](const char* k) { return to_bool(k, values.at(k)); };
  auto path = [&](const char* k) {
    const std::string& v = values.at(k);
    return v.empty() ? std::filesystem::path() : base_dir / v;
  };

  RunConfig c;
  c.model.d = size("d");
  c.model.heads = size("heads");
  c.model.attention_layers = size("attention_layers");
  c.model.interleave_period = size("interleave_period");
  c.model.substrate_layers = size("substrate_layers");
  c.model.k_neighbors = size("k_neighbors");
  c.model.ffn_multiplier = size("ffn_multiplier");
  c.model.max_len = size("max_len");
  c.model.lambda_half = real("lambda_half");
  c.model.radius = real("radius");
  c.model.layer_norm_eps = real("layer_norm_eps");
  c.model.coord_init_gain = real("coord_init_gain");
  try {
    c.model.knn_mode = knn_mode_from_string(values.at("knn_mode"));
  } catch (const Error& e) {
    throw ConfigError(std::string("knn_mode: ") + e.what());
  }
  c.model.freeze_motif_coords = flag("freeze_motif_coords");

  const std::size_t steps = size("steps");
  c.schedule = TrainSchedule::with_total_steps(steps);
  if (values.at("phase1_steps") != "auto") {
    const std::size_t p1 = size("phase1_steps");
    if (p1 > steps) throw ConfigError("phase1_steps: exceeds steps (" + std::to_string(steps) + ")");
    c.schedule.phase1_steps = p1;
    c.schedule.phase2_steps = steps - p1;
  }
  c.schedule.learning_rate = real("learning_rate");
  c.schedule.batch_residues = size("batch_residues");
  c.schedule.seed = size("seed");
  c.schedule.mlm_pretrain_steps = size("mlm_pretrain_steps");
  c.schedule.mlm_mask_fraction = real("mlm_mask_fraction");
  c.schedule.mlm_respect_motif = flag("mlm_respect_motif");
  c.schedule.checkpoint_every = size("checkpoint_every");

  c.identity_threshold = real("identity_threshold");
  c.split_fractions.valid = real("valid_fraction");
  c.split_fractions.test = real("test_fraction");

  c.structures = path("structures");
  c.alignments = path("alignments");
  c.sites = path("sites");
  c.substrates = path("substrates");
  c.pairings = path("pairings");
  c.splits = path("splits");
  c.checkpoint = path("checkpoint");
  c.loss_log = path("loss_log");
  c.resume = flag("resume");

  c.model.validate();
  c.schedule.validate();
  if (!(c.identity_threshold > 0.0 && c.identity_threshold <= 1.0)) {
    throw ConfigError("identity_threshold: must lie in (0, 1]");
  }
  if (c.split_fractions.valid < 0.0 || c.split_fractions.test < 0.0 ||
      c.split_fractions.valid + c.split_fractions.test >= 1.0) {
    throw ConfigError("valid_fraction/test_fraction: must be non-negative and sum below 1");
  }
  if (c.checkpoint.empty()) throw ConfigError("checkpoint: required");
  if (c.loss_log.empty()) throw ConfigError("loss_log: required");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_run_config(in, path.parent_path());
}

void validate_paths(const RunConfig& c) {
  auto need_dir = [](const char* key, const std::filesystem::path& p) {
    if (p.empty()) throw ConfigError(std::string(key) + ": required");
    if (!std::filesystem::is_directory(p)) throw ConfigError(std::string(key) + ": not a directory: " + p.string());
  };
  auto need_file = [](const char* key, const std::filesystem::path& p) {
    if (p.empty()) throw ConfigError(std::string(key) + ": required");
    if (!std::filesystem::is_regular_file(p)) throw ConfigError(std::string(key) + ": no such file: " + p.string());
  };
  auto out_dir = [](const char* key, const std::filesystem::path& p) {
    const auto dir = p.parent_path();
    if (!dir.empty() && !std::filesystem::is_directory(dir)) {
      throw ConfigError(std::string(key) + ": directory does not exist: " + dir.string());
    }
  };
  need_dir("structures", c.structures);
  need_dir("alignments", c.alignments);
  need_file("sites", c.sites);
  if (!c.substrates.empty()) need_dir("substrates", c.substrates);
  if (!c.pairings.empty()) need_file("pairings", c.pairings);
  if (!c.splits.empty()) out_dir("splits", c.splits);
  out_dir("checkpoint", c.checkpoint);
  out_dir("loss_log", c.loss_log);
  if (c.schedule.phase2_steps > 0 && c.substrates.empty()) {
    throw ConfigError("substrates: required when phase 2 has steps");
  }
}

Dataset build_dataset(const RunConfig& c, const WarningSink& warn) {
  const auto structures = load_structures(c.structures, warn);
  const auto sites = read_site_manifest(c.sites);
  const auto ec_numbers = ec_numbers_from_alignments(c.alignments);
  std::map<std::string, SubstrateRecord> pool;
  if (!c.substrates.empty()) pool = load_substrates(c.substrates);
  std::vector<Pairing> pairings;
  if (!c.pairings.empty()) {
    std::ifstream in(c.pairings);
    pairings = read_pairings(in);
  }

  SplitManifest splits;
  if (!c.splits.empty() && std::filesystem::exists(c.splits)) {
    std::ifstream in(c.splits);
    splits = read_split_manifest(in);
  } else {
    std::vector<SequenceEntry> entries;
    for (const auto& s : structures) entries.push_back({s.id, s.sequence});
    std::set<std::string> has_positive;
    for (const auto& p : pairings) {
      if (p.label == 1) has_positive.insert(p.enzyme_id);
    }
    const auto clusters = cluster_by_identity(entries, c.identity_threshold);
    splits = assign_splits(entries, clusters, c.split_fractions, c.schedule.seed,
                           [&](const std::string& id) { return has_positive.count(id) != 0; });
    if (!c.splits.empty()) {
      std::ofstream out(c.splits);
      if (!out) throw DataError("cannot write split manifest " + c.splits.string());
      write_split_manifest(out, splits);
    }
  }
  return assemble_dataset(structures, sites, ec_numbers, std::move(pool), pairings, splits, c.schedule.seed);
}

}  // namespace enzygen
