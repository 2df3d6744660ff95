#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "capforge/error.hpp"

namespace capforge {

// Routing decision for one input: the k chosen expert indices in descending
// weight order, with the chosen weights renormalized to sum to 1.
struct GateDecision {
  std::vector<std::size_t> selected;
  std::vector<double> weights;
};

// Pick the k largest probabilities; ties go to the lower expert index.
inline GateDecision top_k_select(const std::vector<double>& probs, std::size_t k) {
  const std::size_t n = probs.size();
  if (k < 1 || k > n) {
    throw ConfigError("top_k_select: k=" + std::to_string(k) +
                      " out of range [1, " + std::to_string(n) + "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs[a] > probs[b];
  });
  GateDecision d;
  d.selected.assign(order.begin(), order.begin() + k);
  double sum = 0.0;
  for (std::size_t i : d.selected) sum += probs[i];
  d.weights.reserve(k);
  for (std::size_t i : d.selected) d.weights.push_back(probs[i] / sum);
  return d;
}

}  // namespace capforge
