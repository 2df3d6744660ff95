#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "capforge/error.hpp"
#include "capforge/matrix.hpp"

namespace capforge {

// A sequence split into N contiguous patches of length p, stored N x p.
struct PatchGrid {
  std::size_t num_patches = 0;
  std::size_t patch_size = 0;
  Matrix values;
};

inline PatchGrid patchify(const std::vector<double>& sequence, std::size_t p) {
  const std::size_t len = sequence.size();
  if (p == 0 || len % p != 0) {
    throw ConfigError("patch size " + std::to_string(p) +
                      " does not divide sequence length " + std::to_string(len));
  }
  PatchGrid g;
  g.num_patches = len / p;
  g.patch_size = p;
  g.values = Matrix(g.num_patches, p, sequence);
  return g;
}

inline std::vector<double> unpatchify(const PatchGrid& grid) {
  return grid.values.values();
}

}  // namespace capforge
