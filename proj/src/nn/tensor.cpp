#include "curioflock/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace curioflock::nn {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw ShapeError("negative dimension in shape " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  if (shape.size() == 1) out << ',';
  out << ')';
  return out.str();
}

Tensor::Tensor(Shape shape, Real fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_string(shape_));
  }
}

std::span<Real> Tensor::row(int i) {
  const std::size_t width = data_.size() / static_cast<std::size_t>(shape_.at(0));
  return std::span<Real>(data_).subspan(static_cast<std::size_t>(i) * width, width);
}

std::span<const Real> Tensor::row(int i) const {
  const std::size_t width = data_.size() / static_cast<std::size_t>(shape_.at(0));
  return std::span<const Real>(data_).subspan(static_cast<std::size_t>(i) * width, width);
}

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

Tensor concat_features(const Tensor& left, const Tensor& right) {
  if (left.rank() != 2 || right.rank() != 2 || left.dim(0) != right.dim(0)) {
    throw ShapeError("concat_features needs two (N, d) tensors, got " + shape_string(left.shape()) + " and " +
                     shape_string(right.shape()));
  }
  const int n = left.dim(0), a = left.dim(1), b = right.dim(1);
  Tensor out({n, a + b});
  for (int i = 0; i < n; ++i) {
    auto dst = out.row(i);
    std::copy_n(left.row(i).begin(), a, dst.begin());
    std::copy_n(right.row(i).begin(), b, dst.begin() + a);
  }
  return out;
}

void split_features(const Tensor& joined, int left_width, Tensor& left, Tensor& right) {
  if (joined.rank() != 2 || left_width > joined.dim(1)) {
    throw ShapeError("split_features: bad split of " + shape_string(joined.shape()));
  }
  const int n = joined.dim(0), b = joined.dim(1) - left_width;
  left = Tensor({n, left_width});
  right = Tensor({n, b});
  for (int i = 0; i < n; ++i) {
    auto src = joined.row(i);
    std::copy_n(src.begin(), left_width, left.row(i).begin());
    std::copy_n(src.begin() + left_width, b, right.row(i).begin());
  }
}

}  // namespace curioflock::nn
