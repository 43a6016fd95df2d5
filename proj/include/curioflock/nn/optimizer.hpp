#pragma once

#include <cstdint>
#include <stdexcept>

#include "curioflock/nn/parameters.hpp"

namespace curioflock::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One bias-corrected adaptive-moment step. Throws NonFiniteError naming the
// first parameter with a non-finite gradient; nothing is modified then.
void optimizer_step(ParameterSet& params, const Gradients& grads, double learning_rate, const AdamConfig& config = {});

// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns the
// norm before clipping.
double clip_global_norm(Gradients& grads, double max_norm);

// base_lr * (1 - step / total_steps), clamped at 0 past the end.
double linear_lr(std::int64_t step, std::int64_t total_steps, double base_lr);

}  // namespace curioflock::nn
