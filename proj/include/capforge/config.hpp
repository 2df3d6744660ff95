#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "capforge/error.hpp"

namespace capforge {

// Architecture hyperparameters. Defaults match the reference setup:
// window 36, two multi-scale layers of four experts with patch sizes
// [18,12,9,6] and [6,4,3,2], top-3 routing, 2x64 MLPs on both patch axes.
struct ModelConfig {
  std::size_t window_w = 36;
  std::size_t num_layers_m = 2;
  std::size_t experts_per_layer_n = 4;
  std::size_t active_experts_k = 3;
  std::vector<std::vector<std::size_t>> patch_sizes = {{18, 12, 9, 6},
                                                       {6, 4, 3, 2}};
  std::size_t intra_depth = 2;
  std::size_t inter_depth = 2;
  std::size_t intra_width = 64;
  std::size_t inter_width = 64;
  bool enable_intra = true;
  bool enable_inter = true;
  std::uint64_t seed = 0;

  void validate() const {
    if (window_w < 2) {
      throw ConfigError("window_w must be at least 2");
    }
    if (num_layers_m == 0 || experts_per_layer_n == 0) {
      throw ConfigError("need at least one layer and one expert");
    }
    if (active_experts_k < 1 || active_experts_k > experts_per_layer_n) {
      throw ConfigError("active_experts_k=" + std::to_string(active_experts_k) +
                        " out of range [1, " +
                        std::to_string(experts_per_layer_n) + "]");
    }
    if (patch_sizes.size() != num_layers_m) {
      throw ConfigError("patch_sizes has " + std::to_string(patch_sizes.size()) +
                        " layer entries, expected " + std::to_string(num_layers_m));
    }
    for (std::size_t l = 0; l < patch_sizes.size(); ++l) {
      if (patch_sizes[l].size() != experts_per_layer_n) {
        throw ConfigError("layer " + std::to_string(l) + " lists " +
                          std::to_string(patch_sizes[l].size()) +
                          " patch sizes, expected " +
                          std::to_string(experts_per_layer_n));
      }
      for (std::size_t p : patch_sizes[l]) {
        if (p == 0 || window_w % p != 0) {
          throw ConfigError("patch size " + std::to_string(p) +
                            " does not divide window_w " +
                            std::to_string(window_w));
        }
      }
    }
    if (intra_depth == 0 || inter_depth == 0 || intra_width == 0 ||
        inter_width == 0) {
      throw ConfigError("MLP depth and width must be positive");
    }
    if (!enable_intra && !enable_inter) {
      throw ConfigError("at least one of the intra/inter paths must be enabled");
    }
  }

  ModelConfig with_k(std::size_t k) const {
    ModelConfig c = *this;
    c.active_experts_k = k;
    return c;
  }

  ModelConfig with_seed(std::uint64_t s) const {
    ModelConfig c = *this;
    c.seed = s;
    return c;
  }
};

}  // namespace capforge
