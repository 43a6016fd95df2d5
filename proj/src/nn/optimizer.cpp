#include "curioflock/nn/optimizer.hpp"

#include <cmath>
#include <string>

namespace curioflock::nn {

void optimizer_step(ParameterSet& params, const Gradients& grads, double learning_rate, const AdamConfig& config) {
  if (learning_rate < 0.0) throw std::invalid_argument("learning rate must be non-negative");
  if (grads.count() != params.count()) throw std::invalid_argument("gradient count does not match parameter count");
  for (std::size_t i = 0; i < params.count(); ++i) {
    if (grads[i].shape() != params.value(i).shape()) {
      throw std::invalid_argument("gradient shape mismatch for " + params.at(i).name);
    }
    if (!grads[i].all_finite()) throw NonFiniteError("non-finite gradient for parameter " + params.at(i).name);
  }

  params.advance_step();
  const double t = static_cast<double>(params.step());
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.count(); ++i) {
    Parameter& p = params.mutable_at(i);
    const Tensor& g = grads[i];
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double gj = g[j];
      const double m = config.beta1 * p.first_moment[j] + (1.0 - config.beta1) * gj;
      const double v = config.beta2 * p.second_moment[j] + (1.0 - config.beta2) * gj * gj;
      p.first_moment[j] = static_cast<Real>(m);
      p.second_moment[j] = static_cast<Real>(v);
      const double m_hat = m / correction1;
      const double v_hat = v / correction2;
      p.value[j] = static_cast<Real>(p.value[j] - learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon));
    }
  }
}

double clip_global_norm(Gradients& grads, double max_norm) {
  const double norm = grads.global_norm();
  if (norm > max_norm && norm > 0.0) grads.scale(max_norm / norm);
  return norm;
}

double linear_lr(std::int64_t step, std::int64_t total_steps, double base_lr) {
  if (total_steps <= 0) throw std::invalid_argument("total_steps must be positive");
  if (step <= 0) return base_lr;
  if (step >= total_steps) return 0.0;
  return base_lr * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

}  // namespace curioflock::nn
