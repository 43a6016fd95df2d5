#include "curioflock/nn/parameters.hpp"

#include <atomic>
#include <cmath>

namespace curioflock::nn {

namespace {
std::uint64_t next_set_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}
}  // namespace

ParameterSet::ParameterSet() : id_(next_set_id()) {}

ParameterSet::ParameterSet(const ParameterSet& other)
    : params_(other.params_), index_(other.index_), step_(other.step_), version_(other.version_), id_(next_set_id()) {}

ParameterSet& ParameterSet::operator=(const ParameterSet& other) {
  if (this != &other) {
    params_ = other.params_;
    index_ = other.index_;
    step_ = other.step_;
    ++version_;
  }
  return *this;
}

std::size_t ParameterSet::add(std::string name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  const std::size_t idx = params_.size();
  Parameter p;
  p.first_moment = Tensor(value.shape());
  p.second_moment = Tensor(value.shape());
  p.value = std::move(value);
  p.name = name;
  params_.push_back(std::move(p));
  index_.emplace(std::move(name), idx);
  ++version_;
  return idx;
}

bool ParameterSet::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

std::size_t ParameterSet::index_of(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + std::string(name));
  return it->second;
}

Tensor& ParameterSet::mutable_value(std::string_view name) { return mutable_value(index_of(name)); }

Tensor& ParameterSet::mutable_value(std::size_t index) {
  ++version_;
  return params_.at(index).value;
}

Parameter& ParameterSet::mutable_at(std::size_t index) {
  ++version_;
  return params_.at(index);
}

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

std::uint64_t ParameterSet::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : params_) {
    h = fnv1a(p.name.data(), p.name.size(), h);
    h = fnv1a(p.value.shape().data(), p.value.shape().size() * sizeof(int), h);
    h = fnv1a(p.value.ptr(), p.value.size() * sizeof(Real), h);
  }
  return h;
}

void ParameterSet::zero(std::string_view prefix) {
  for (auto& p : params_) {
    if (std::string_view(p.name).starts_with(prefix)) p.value.fill(Real(0));
  }
  ++version_;
}

Gradients::Gradients(const ParameterSet& params) {
  grads_.reserve(params.count());
  for (const auto& p : params.parameters()) grads_.emplace_back(p.value.shape());
}

void Gradients::zero() {
  for (auto& g : grads_) g.fill(Real(0));
}

double Gradients::global_norm() const {
  double sum = 0.0;
  for (const auto& g : grads_) {
    for (Real v : g.data()) sum += static_cast<double>(v) * static_cast<double>(v);
  }
  return std::sqrt(sum);
}

void Gradients::scale(double factor) {
  for (auto& g : grads_) {
    for (Real& v : g.data()) v = static_cast<Real>(v * factor);
  }
}

bool Gradients::all_zero() const {
  for (const auto& g : grads_) {
    for (Real v : g.data()) {
      if (v != Real(0)) return false;
    }
  }
  return true;
}

void init_fan_in_uniform(Tensor& tensor, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Real& v : tensor.data()) v = static_cast<Real>(dist(rng));
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace curioflock::nn
