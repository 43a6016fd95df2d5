#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "curioflock/nn/parameters.hpp"
#include "curioflock/nn/tensor.hpp"

namespace curioflock::nn {

// Valid (padding = 0) or zero-padded 2D convolution over (C, H, W) inputs.
struct Conv2d {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int padding = 0;
};

struct Dense {
  int in_features = 0;
  int out_features = 0;
};

struct Elu {};
struct Relu {};
struct Flatten {};

// relu(conv3x3(relu(conv3x3(x))) + shortcut(x)). When the block changes
// channel count or stride, the shortcut subsamples spatially and zero-pads
// the extra channels, so the block holds exactly two convolutions.
struct ResidualBlock {
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
};

// Normalizes consecutive groups of the input with a softmax (or log-softmax
// when `log_space`), then copies `passthrough` trailing units unchanged.
struct SoftmaxHead {
  std::vector<int> groups;
  int passthrough = 0;
  bool log_space = false;
};

using LayerSpec = std::variant<Conv2d, Dense, Elu, Relu, ResidualBlock, Flatten, SoftmaxHead>;

std::string_view kind_name(const LayerSpec& layer);

struct ParamInfo {
  std::string name;
  Shape shape;
  int fan_in = 0;  // 0 for biases
};

class Stack;

// Activation record of one forward pass. A tape can be consumed by exactly
// one backward call and only while its parameter set is unchanged.
class Tape {
 public:
  Tape() = default;
  bool recorded() const { return stack_ != nullptr; }
  bool consumed() const { return consumed_; }
  const ParameterSet* parameters() const { return params_; }

 private:
  friend class Stack;
  struct LayerCache {
    Tensor input;
    Tensor output;
    std::vector<Tensor> aux;
  };
  const Stack* stack_ = nullptr;
  const ParameterSet* params_ = nullptr;
  std::uint64_t params_id_ = 0;
  std::uint64_t params_version_ = 0;
  bool consumed_ = false;
  std::vector<LayerCache> caches_;
};

class Stack {
 public:
  Stack() = default;
  // Validates shape compatibility of adjacent layers; throws ShapeError
  // naming the offending layer.
  Stack(std::string prefix, Shape input_shape, std::vector<LayerSpec> layers);

  const std::string& prefix() const { return prefix_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return shapes_.back(); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Shape& layer_input_shape(std::size_t i) const { return shapes_.at(i); }

  std::vector<ParamInfo> parameter_layout() const;
  std::size_t parameter_count() const;
  void init_parameters(ParameterSet& params, Rng& rng) const;

  // `input` carries a leading batch dimension. Pass a tape to record what
  // backward needs; pass nullptr for inference.
  Tensor forward(const ParameterSet& params, const Tensor& input, Tape* tape = nullptr) const;

  // Accumulates parameter gradients into `grads` (aligned with the tape's
  // ParameterSet) and returns the gradient with respect to the input.
  Tensor backward(Tape& tape, const Tensor& output_grad, Gradients& grads) const;

 private:
  std::string param_name(std::size_t layer, std::string_view suffix) const;
  void check_input(const Tensor& input) const;

  std::string prefix_;
  Shape input_shape_;
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;  // shapes_[i] = input of layer i; shapes_.back() = output
};

struct ForwardResult {
  Tensor output;
  Tape tape;
};

ForwardResult forward(const Stack& stack, const ParameterSet& params, const Tensor& input);

struct BackwardResult {
  Gradients param_gradients;
  Tensor input_gradient;
};

BackwardResult backward(const Stack& stack, Tape& tape, const Tensor& output_grad);

}  // namespace curioflock::nn
