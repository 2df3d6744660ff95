#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "capforge/error.hpp"

namespace capforge {

// Per-window statistics retained so predictions can be mapped back to Ah.
struct NormStats {
  double mean = 0.0;
  double std = 1.0;
};

// Floor applied when a window is constant, to keep the division defined.
inline constexpr double kStdFloor = 1e-8;

// Population mean/std of one window.
inline NormStats window_stats(const std::vector<double>& window) {
  if (window.size() < 2) {
    throw ConfigError("window_stats: window must hold at least 2 values");
  }
  double mean = 0.0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(window.size());
  double var = 0.0;
  for (double v : window) var += (v - mean) * (v - mean);
  var /= static_cast<double>(window.size());
  double std = std::sqrt(var);
  if (std < kStdFloor) std = kStdFloor;
  return NormStats{mean, std};
}

// Instance normalization of one window by its own statistics.
inline std::pair<std::vector<double>, NormStats> normalize_window(
    const std::vector<double>& window) {
  const NormStats stats = window_stats(window);
  std::vector<double> out(window.size());
  for (std::size_t i = 0; i < window.size(); ++i)
    out[i] = (window[i] - stats.mean) / stats.std;
  return {std::move(out), stats};
}

inline double denormalize(double value, const NormStats& stats) {
  return value * stats.std + stats.mean;
}

}  // namespace capforge
