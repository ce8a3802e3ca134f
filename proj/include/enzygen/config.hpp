#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include "enzygen/ec_tree.hpp"

namespace enzygen {

enum class KnnMode { kDynamic, kFrozen };

std::string to_string(KnnMode mode);
KnnMode knn_mode_from_string(const std::string& text);

// Architecture hyperparameters. Defaults are the desk-scale model; full_scale()
// returns the full-size configuration.
struct ModelConfig {
  std::size_t d = 64;
  std::size_t heads = 4;
  /// Global-attention sub-layers in the enzyme stack (L_e).
  std::size_t attention_layers = 6;
  /// A neighbourhood equivariant sub-layer follows every `interleave_period`
  /// attention sub-layers.
  std::size_t interleave_period = 2;
  /// Neighbourhood layers in the substrate module (L_s).
  std::size_t substrate_layers = 3;
  std::size_t k_neighbors = 30;
  std::size_t ffn_multiplier = 4;
  std::size_t max_len = 256;
  /// λ/2 weighting of the coordinate term.
  double lambda_half = 1.0;
  double radius = 3.75;
  double layer_norm_eps = 1e-5;
  /// Gain on the last coordinate-FFN layer at initialisation.
  double coord_init_gain = 1e-3;
  KnnMode knn_mode = KnnMode::kDynamic;
  bool freeze_motif_coords = false;
  std::array<std::size_t, kTagLevels> tag_vocab{1, 1, 1, 1};

  std::size_t neighborhood_layers() const { return attention_layers / interleave_period; }
  std::size_t head_dim() const { return d / heads; }
  bool neighborhood_after(std::size_t attention_index) const {
    return (attention_index + 1) % interleave_period == 0;
  }

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// 33 attention sub-layers, one neighbourhood sub-layer after every 11,
  /// d = 1280, 3 substrate layers, K = 30, λ/2 = 1.0.
  static ModelConfig full_scale();
  static ModelConfig desk();

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace enzygen
