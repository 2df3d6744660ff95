#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "capforge/error.hpp"
#include "capforge/matrix.hpp"

namespace capforge {

// output[b][j] = sum_i input[b][i] * weight[i][j] + bias[j]
inline Matrix linear_forward(const Matrix& input, const Matrix& weight,
                             const std::vector<double>& bias) {
  if (input.cols() != weight.rows()) {
    throw DimensionError("linear_forward: input " + input.shape_str() +
                         " does not conform with weight " + weight.shape_str());
  }
  if (bias.size() != weight.cols()) {
    throw DimensionError("linear_forward: bias length " +
                         std::to_string(bias.size()) + " does not match weight " +
                         weight.shape_str());
  }
  Matrix out = matmul(input, weight);
  for (std::size_t b = 0; b < out.rows(); ++b)
    for (std::size_t j = 0; j < out.cols(); ++j) out(b, j) += bias[j];
  return out;
}

inline Matrix relu(const Matrix& input) {
  Matrix out = input;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  return out;
}

// Max-subtracted softmax over one logit vector.
inline std::vector<double> softmax_row(const std::vector<double>& logits) {
  if (logits.empty()) {
    throw DimensionError("softmax_row: empty logits");
  }
  double mx = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) {
      throw NumericError("softmax_row: non-finite logit");
    }
    mx = std::max(mx, v);
  }
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

inline double mae(const std::vector<double>& predicted,
                  const std::vector<double>& actual) {
  if (predicted.size() != actual.size()) {
    throw DimensionError("mae: length mismatch " + std::to_string(predicted.size()) +
                         " vs " + std::to_string(actual.size()));
  }
  if (predicted.empty()) {
    throw DimensionError("mae: empty vectors");
  }
  double s = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t)
    s += std::abs(actual[t] - predicted[t]);
  return s / static_cast<double>(predicted.size());
}

inline double rmse(const std::vector<double>& predicted,
                   const std::vector<double>& actual) {
  if (predicted.size() != actual.size()) {
    throw DimensionError("rmse: length mismatch " +
                         std::to_string(predicted.size()) + " vs " +
                         std::to_string(actual.size()));
  }
  if (predicted.empty()) {
    throw DimensionError("rmse: empty vectors");
  }
  double s = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    const double e = actual[t] - predicted[t];
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(predicted.size()));
}

}  // namespace capforge
