#include "enzygen/parameters.hpp"

#include <cmath>
#include <cstring>

#include "enzygen/amino.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/rng.hpp"

namespace enzygen {

Tensor& ParameterStore::add(const std::string& name, Tensor value) {
  auto [it, inserted] = tensors_.insert_or_assign(name, std::move(value));
  return it->second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ParameterError("missing parameter '" + name + "'");
  return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ParameterError("missing parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(tensors_.size());
  for (const auto& [name, _] : tensors_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& [_, t] : tensors_)
    if (t.requires_grad()) t.zero_grad();
}

void ParameterStore::set_requires_grad(bool on) {
  for (auto& [_, t] : tensors_) t.set_requires_grad(on);
}

bool ParameterStore::identical(const ParameterStore& other) const {
  if (tensors_.size() != other.tensors_.size()) return false;
  auto a = tensors_.begin();
  auto b = other.tensors_.begin();
  for (; a != tensors_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.shape() != b->second.shape()) return false;
    if (std::memcmp(a->second.data().data(), b->second.data().data(), a->second.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

namespace param_names {

std::string attention(std::size_t layer, const std::string& leaf) {
  return "attention." + std::to_string(layer) + "." + leaf;
}
std::string neighborhood(std::size_t layer, const std::string& leaf) {
  return "neighborhood." + std::to_string(layer) + "." + leaf;
}
std::string substrate(std::size_t layer, const std::string& leaf) {
  return "substrate." + std::to_string(layer) + "." + leaf;
}
std::string tag_table(std::size_t level) { return "embed.tag." + std::to_string(level); }

}  // namespace param_names

namespace {

Tensor xavier(Rng& rng, std::size_t fan_in, std::size_t fan_out, Shape shape, double gain = 1.0) {
  const double limit = gain * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor embedding(Rng& rng, std::size_t rows, std::size_t d) {
  Tensor t({rows, d});
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& v : t.data()) v = s * rng.normal();
  return t;
}

Tensor zeros_row(std::size_t n) { return Tensor({1, n}); }
Tensor ones_row(std::size_t n) { return Tensor({1, n}, 1.0); }

// Message FFN of the neighbourhood layer. The first layer acting on
// [h_i; h_k; dist] is stored as three blocks (centre, neighbour, distance).
void add_message_ffn(ParameterStore& p, Rng& rng, const std::string& prefix, std::size_t d) {
  const std::size_t fan_in = 2 * d + 1;
  p.add(prefix + "msg.w_center", xavier(rng, fan_in, d, {d, d}));
  p.add(prefix + "msg.w_neighbor", xavier(rng, fan_in, d, {d, d}));
  p.add(prefix + "msg.w_distance", xavier(rng, fan_in, d, {1, d}));
  p.add(prefix + "msg.b1", zeros_row(d));
  p.add(prefix + "msg.w2", xavier(rng, d, d, {d, d}));
  p.add(prefix + "msg.b2", zeros_row(d));
}

void add_gate_ffn(ParameterStore& p, Rng& rng, const std::string& prefix, std::size_t d) {
  p.add(prefix + "gate.w1", xavier(rng, d, d, {d, d}));
  p.add(prefix + "gate.b1", zeros_row(d));
  p.add(prefix + "gate.w2", xavier(rng, d, d, {d, d}));
  p.add(prefix + "gate.b2", zeros_row(d));
}

}  // namespace

ParameterStore init_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const std::size_t d = config.d;
  const std::size_t hidden = config.ffn_multiplier * d;
  Rng rng(seed, {0x9a7});
  ParameterStore p;

  p.add(param_names::kAmino, embedding(rng, kNumAminoAcids, d));
  p.add(param_names::kMask, embedding(rng, 1, d));
  p.add(param_names::kPosition, embedding(rng, config.max_len, d));
  for (std::size_t k = 0; k < kTagLevels; ++k) p.add(param_names::tag_table(k), embedding(rng, config.tag_vocab[k], d));

  for (std::size_t l = 0; l < config.attention_layers; ++l) {
    auto name = [l](const std::string& leaf) { return param_names::attention(l, leaf); };
    for (const char* w : {"wq", "wk", "wv", "wo"}) p.add(name(w), xavier(rng, d, d, {d, d}));
    for (const char* b : {"bq", "bk", "bv", "bo"}) p.add(name(b), zeros_row(d));
    p.add(name("ln1.gamma"), ones_row(d));
    p.add(name("ln1.beta"), zeros_row(d));
    p.add(name("ffn.w1"), xavier(rng, d, hidden, {d, hidden}));
    p.add(name("ffn.b1"), zeros_row(hidden));
    p.add(name("ffn.w2"), xavier(rng, hidden, d, {hidden, d}));
    p.add(name("ffn.b2"), zeros_row(d));
    p.add(name("ln2.gamma"), ones_row(d));
    p.add(name("ln2.beta"), zeros_row(d));
  }

  for (std::size_t l = 0; l < config.neighborhood_layers(); ++l) {
    const std::string prefix = param_names::neighborhood(l, "");
    add_message_ffn(p, rng, prefix, d);
    p.add(prefix + "attn.w", xavier(rng, d, 1, {d, 1}));
    p.add(prefix + "attn.b", Tensor({1, 1}));
    p.add(prefix + "coord.w1", xavier(rng, d, d, {d, d}));
    p.add(prefix + "coord.b1", zeros_row(d));
    p.add(prefix + "coord.w2", xavier(rng, d, 1, {d, 1}, config.coord_init_gain));
    p.add(prefix + "coord.b2", Tensor({1, 1}));
    add_gate_ffn(p, rng, prefix, d);
  }

  p.add(param_names::kSubstrateInput, xavier(rng, 5, d, {d, 5}));
  for (std::size_t l = 0; l < config.substrate_layers; ++l) {
    const std::string prefix = param_names::substrate(l, "");
    add_message_ffn(p, rng, prefix, d);
    add_gate_ffn(p, rng, prefix, d);
  }
  // Sum pooling makes the pooled vector grow with N; a small head keeps the
  // first binding logits near zero.
  p.add(param_names::kBinding, xavier(rng, 2 * d, 2, {2, 2 * d}, 0.01));
  return p;
}

}  // namespace enzygen
