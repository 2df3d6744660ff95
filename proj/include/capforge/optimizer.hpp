#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "capforge/error.hpp"
#include "capforge/matrix.hpp"

namespace capforge {

struct OptimizerSettings {
  double learning_rate = 0.005;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) {
      throw ConfigError("learning_rate must be positive");
    }
    if (!(0.0 < beta1 && beta1 < beta2 && beta2 < 1.0)) {
      throw ConfigError("optimizer betas must satisfy 0 < beta1 < beta2 < 1");
    }
    if (!(epsilon > 0.0)) {
      throw ConfigError("epsilon must be positive");
    }
  }
};

// One trainable weight matrix plus its gradient and Adam moment buffers.
// All four matrices share one shape.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix gradient;
  Matrix adam_m;
  Matrix adam_v;
  std::size_t step_count = 0;
  // Set when a backward pass deposited into `gradient`; parameters left
  // untouched by a step are skipped by the optimizer, so experts that saw no
  // rows in a batch do not drift.
  bool touched = false;

  Parameter(std::string name, Matrix v)
      : name(std::move(name)),
        value(std::move(v)),
        gradient(value.rows(), value.cols()),
        adam_m(value.rows(), value.cols()),
        adam_v(value.rows(), value.cols()) {}

  void clear_gradient() {
    gradient.fill(0.0);
    touched = false;
  }
};

// Standard Adam with bias correction. Clears the gradient afterwards.
inline void adam_step(Parameter& p, const OptimizerSettings& s) {
  if (!p.gradient.all_finite()) {
    throw NumericError("non-finite gradient in parameter '" + p.name + "'");
  }
  p.step_count += 1;
  const double b1t = 1.0 - std::pow(s.beta1, static_cast<double>(p.step_count));
  const double b2t = 1.0 - std::pow(s.beta2, static_cast<double>(p.step_count));
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double g = p.gradient[i];
    p.adam_m[i] = s.beta1 * p.adam_m[i] + (1.0 - s.beta1) * g;
    p.adam_v[i] = s.beta2 * p.adam_v[i] + (1.0 - s.beta2) * g * g;
    const double mhat = p.adam_m[i] / b1t;
    const double vhat = p.adam_v[i] / b2t;
    p.value[i] -= s.learning_rate * mhat / (std::sqrt(vhat) + s.epsilon);
  }
  p.clear_gradient();
}

}  // namespace capforge
