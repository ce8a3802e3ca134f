#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "enzygen/config.hpp"
#include "enzygen/tensor.hpp"

namespace enzygen {

// Every learnable tensor, keyed by a stable dotted name. Iteration is in name
// order, which fixes checkpoint layout and optimiser update order.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor value);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }
  void erase(const std::string& name) { tensors_.erase(name); }

  std::vector<std::string> names() const;
  std::size_t size() const { return tensors_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();
  void set_requires_grad(bool on);

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  /// Same names, shapes and values bit-for-bit.
  bool identical(const ParameterStore& other) const;

 private:
  std::map<std::string, Tensor> tensors_;
};

namespace param_names {

std::string attention(std::size_t layer, const std::string& leaf);
std::string neighborhood(std::size_t layer, const std::string& leaf);
std::string substrate(std::size_t layer, const std::string& leaf);
std::string tag_table(std::size_t level);

inline const std::string kAmino = "embed.amino";
inline const std::string kMask = "embed.mask";
inline const std::string kPosition = "embed.position";
inline const std::string kSubstrateInput = "substrate.input";
inline const std::string kBinding = "binding.weight";

}  // namespace param_names

/// Fresh randomly initialised parameters for `config` (Xavier-uniform
/// weights, zero biases, unit layer-norm gains).
ParameterStore init_parameters(const ModelConfig& config, std::uint64_t seed);

}  // namespace enzygen
