#include "enzygen/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "enzygen/errors.hpp"

namespace enzygen {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'E', 'N', 'Z', 'Y', 'G', 'E', 'N', '1'};
constexpr std::uint32_t kVersion = 1;
const std::string kMomentM = "optimizer.m/";
const std::string kMomentV = "optimizer.v/";

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ParseError("checkpoint truncated");
  return value;
}

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"d", c.d},
          {"heads", c.heads},
          {"attention_layers", c.attention_layers},
          {"interleave_period", c.interleave_period},
          {"substrate_layers", c.substrate_layers},
          {"k_neighbors", c.k_neighbors},
          {"ffn_multiplier", c.ffn_multiplier},
          {"max_len", c.max_len},
          {"lambda_half", c.lambda_half},
          {"radius", c.radius},
          {"layer_norm_eps", c.layer_norm_eps},
          {"coord_init_gain", c.coord_init_gain},
          {"knn_mode", to_string(c.knn_mode)},
          {"freeze_motif_coords", c.freeze_motif_coords},
          {"tag_vocab", c.tag_vocab}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d = j.at("d");
  c.heads = j.at("heads");
  c.attention_layers = j.at("attention_layers");
  c.interleave_period = j.at("interleave_period");
  c.substrate_layers = j.at("substrate_layers");
  c.k_neighbors = j.at("k_neighbors");
  c.ffn_multiplier = j.at("ffn_multiplier");
  c.max_len = j.at("max_len");
  c.lambda_half = j.at("lambda_half");
  c.radius = j.at("radius");
  c.layer_norm_eps = j.at("layer_norm_eps");
  c.coord_init_gain = j.at("coord_init_gain");
  c.knn_mode = knn_mode_from_string(j.at("knn_mode").get<std::string>());
  c.freeze_motif_coords = j.at("freeze_motif_coords");
  c.tag_vocab = j.at("tag_vocab").get<std::array<std::size_t, kTagLevels>>();
  return c;
}

void put_entry(std::ostream& out, const std::string& name, const Tensor& t) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
  out.write(reinterpret_cast<const char*>(t.values().data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["config"] = config_to_json(ckpt.config);
  nlohmann::json levels = nlohmann::json::array();
  for (std::size_t k = 0; k < kTagLevels; ++k) levels.push_back(ckpt.tree.names(k));
  header["ec_vocabulary"] = levels;
  header["step"] = ckpt.step;
  header["mlm_step"] = ckpt.mlm_step;
  header["seed"] = ckpt.seed;
  header["optimizer_t"] = ckpt.optimizer.t;
  const std::string text = header.dump();

  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  put<std::uint64_t>(out, ckpt.params.size() + ckpt.optimizer.m.size() + ckpt.optimizer.v.size());
  for (const auto& [name, t] : ckpt.params) put_entry(out, name, t);
  for (const auto& [name, t] : ckpt.optimizer.m) put_entry(out, kMomentM + name, t);
  for (const auto& [name, t] : ckpt.optimizer.v) put_entry(out, kMomentV + name, t);
  if (!out) throw Error("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ParseError("not an enzygen checkpoint");
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get<std::uint64_t>(in);
  if (header_len > (1ull << 30)) throw ParseError("checkpoint header too large");
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError("checkpoint truncated");

  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(text);
    ckpt.config = config_from_json(header.at("config"));
    std::array<std::vector<std::string>, kTagLevels> names;
    for (std::size_t k = 0; k < kTagLevels; ++k) names[k] = header.at("ec_vocabulary").at(k).get<std::vector<std::string>>();
    ckpt.tree = ECTree::from_names(names);
    ckpt.step = header.at("step");
    ckpt.mlm_step = header.at("mlm_step");
    ckpt.seed = header.at("seed");
    ckpt.optimizer.t = header.at("optimizer_t");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint header: ") + e.what());
  }
  ckpt.config.validate();

  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t e = 0; e < count; ++e) {
    const auto name_len = get<std::uint32_t>(in);
    if (name_len > 4096) throw ParseError("checkpoint entry name too long");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rank = get<std::uint32_t>(in);
    if (rank > 8) throw ParseError("checkpoint entry '" + name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t size = 1;
    for (auto& d : shape) {
      d = get<std::uint64_t>(in);
      if (d > (1ull << 32)) throw ParseError("checkpoint entry '" + name + "' has an implausible dimension");
      size *= d;
    }
    std::vector<double> data(size);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size * sizeof(double)));
    if (!in) throw ParseError("checkpoint truncated in entry '" + name + "'");
    Tensor t(std::move(shape), std::move(data));
    if (name.rfind(kMomentM, 0) == 0) {
      ckpt.optimizer.m.add(name.substr(kMomentM.size()), std::move(t));
    } else if (name.rfind(kMomentV, 0) == 0) {
      ckpt.optimizer.v.add(name.substr(kMomentV.size()), std::move(t));
    } else {
      ckpt.params.add(name, std::move(t));
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    write_checkpoint(out, ckpt);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

Checkpoint fresh_checkpoint(ModelConfig config, ECTree tree, std::uint64_t seed) {
  Checkpoint ckpt;
  config.tag_vocab = tree.vocab_sizes();
  config.validate();
  ckpt.params = init_parameters(config, seed);
  ckpt.config = config;
  ckpt.tree = std::move(tree);
  ckpt.seed = seed;
  return ckpt;
}

}  // namespace enzygen
