#include "enzygen/config.hpp"

#include "enzygen/errors.hpp"

namespace enzygen {

std::string to_string(KnnMode mode) { return mode == KnnMode::kDynamic ? "dynamic" : "frozen"; }

KnnMode knn_mode_from_string(const std::string& text) {
  if (text == "dynamic") return KnnMode::kDynamic;
  if (text == "frozen") return KnnMode::kFrozen;
  throw ConfigError("knn_mode must be 'dynamic' or 'frozen', got '" + text + "'");
}

void ModelConfig::validate() const {
  if (d == 0) throw ConfigError("d must be positive");
  if (heads == 0) throw ConfigError("heads must be positive");
  if (d % heads != 0) {
    throw ConfigError("heads: d=" + std::to_string(d) + " is not divisible by head count " + std::to_string(heads));
  }
  if (attention_layers == 0) throw ConfigError("attention_layers must be positive");
  if (interleave_period == 0) throw ConfigError("interleave_period must be positive");
  if (interleave_period > attention_layers) {
    throw ConfigError("interleave_period (" + std::to_string(interleave_period) + ") exceeds attention_layers (" +
                      std::to_string(attention_layers) + ")");
  }
  if (k_neighbors == 0) throw ConfigError("k_neighbors must be positive");
  if (ffn_multiplier == 0) throw ConfigError("ffn_multiplier must be positive");
  if (max_len == 0) throw ConfigError("max_len must be positive");
  if (!(lambda_half >= 0.0)) throw ConfigError("lambda_half must be non-negative");
  if (!(radius > 0.0)) throw ConfigError("radius must be positive");
  if (!(layer_norm_eps > 0.0)) throw ConfigError("layer_norm_eps must be positive");
  for (std::size_t k = 0; k < kTagLevels; ++k) {
    if (tag_vocab[k] == 0) throw ConfigError("tag_vocab level " + std::to_string(k + 1) + " is empty");
  }
}

ModelConfig ModelConfig::full_scale() {
  ModelConfig c;
  c.d = 1280;
  c.heads = 20;
  c.attention_layers = 33;
  c.interleave_period = 11;
  c.substrate_layers = 3;
  c.k_neighbors = 30;
  c.max_len = 1024;
  c.lambda_half = 1.0;
  return c;
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

}  // namespace enzygen
