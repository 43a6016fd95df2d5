#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "curioflock/nn/tensor.hpp"

namespace curioflock::nn {

using Rng = std::mt19937_64;

struct Parameter {
  std::string name;
  Tensor value;
  // Adaptive-moment accumulators, zero until the first optimizer step.
  Tensor first_moment;
  Tensor second_moment;
};

// Named parameter tensors plus their optimizer state. Every mutation through
// the non-const accessors bumps `version()`, which lets tapes detect that the
// weights they were recorded against have changed.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  const Tensor& value(std::string_view name) const { return params_[index_of(name)].value; }
  const Tensor& value(std::size_t index) const { return params_.at(index).value; }
  Tensor& mutable_value(std::string_view name);
  Tensor& mutable_value(std::size_t index);

  std::size_t count() const { return params_.size(); }
  const Parameter& at(std::size_t index) const { return params_.at(index); }
  Parameter& mutable_at(std::size_t index);
  const std::vector<Parameter>& parameters() const { return params_; }

  std::size_t total_elements() const;
  std::int64_t step() const { return step_; }
  void advance_step() { ++step_; }
  std::uint64_t version() const { return version_; }
  std::uint64_t id() const { return id_; }

  // FNV-1a over names, shapes and value bytes.
  std::uint64_t hash() const;

  // Zeroes every parameter whose name starts with `prefix`.
  void zero(std::string_view prefix);

  ParameterSet();
  ParameterSet(const ParameterSet& other);
  ParameterSet& operator=(const ParameterSet& other);
  ParameterSet(ParameterSet&&) noexcept = default;
  ParameterSet& operator=(ParameterSet&&) noexcept = default;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
  std::int64_t step_ = 0;
  std::uint64_t version_ = 0;
  std::uint64_t id_;
};

// Gradient buffers aligned index-for-index with a ParameterSet.
class Gradients {
 public:
  Gradients() = default;
  explicit Gradients(const ParameterSet& params);

  std::size_t count() const { return grads_.size(); }
  Tensor& operator[](std::size_t i) { return grads_.at(i); }
  const Tensor& operator[](std::size_t i) const { return grads_.at(i); }

  void zero();
  double global_norm() const;
  void scale(double factor);
  bool all_zero() const;

 private:
  std::vector<Tensor> grads_;
};

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_fan_in_uniform(Tensor& tensor, int fan_in, Rng& rng);

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace curioflock::nn
