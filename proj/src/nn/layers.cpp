#include "curioflock/nn/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace curioflock::nn {

namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<Mat>;
using ConstMatMap = Eigen::Map<const Mat>;
using VecMap = Eigen::Map<Eigen::Matrix<Real, Eigen::Dynamic, 1>>;
using ConstVecMap = Eigen::Map<const Eigen::Matrix<Real, Eigen::Dynamic, 1>>;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int conv_out(int size, int kernel, int stride, int padding) { return (size + 2 * padding - kernel) / stride + 1; }

struct ConvGeom {
  int n, c, h, w;
  int o, k, s, p;
  int ho, wo;
  int patch() const { return c * k * k; }
  int positions() const { return ho * wo; }
};

// Bounds the transient im2col buffer to ~1M elements so it stays cache resident.
int conv_chunk(const ConvGeom& g) {
  const std::size_t per_sample = static_cast<std::size_t>(g.patch()) * static_cast<std::size_t>(g.positions());
  const std::size_t budget = std::size_t{1} << 20;
  return static_cast<int>(std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(g.n), budget / per_sample)));
}

// cols: (patch, chunk * positions), column index = local_sample * positions + pos.
void im2col(const ConvGeom& g, const Real* x, int first, int count, Real* cols) {
  const int positions = g.positions();
  const int stride_cols = count * positions;
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const int row = (ci * g.k + ky) * g.k + kx;
        Real* dst_row = cols + static_cast<std::size_t>(row) * stride_cols;
        for (int ln = 0; ln < count; ++ln) {
          const Real* plane = x + (static_cast<std::size_t>(first + ln) * g.c + ci) * g.h * g.w;
          Real* dst = dst_row + ln * positions;
          for (int oy = 0; oy < g.ho; ++oy) {
            const int iy = oy * g.s - g.p + ky;
            if (iy < 0 || iy >= g.h) {
              std::fill_n(dst + oy * g.wo, g.wo, Real(0));
              continue;
            }
            const Real* src = plane + iy * g.w;
            for (int ox = 0; ox < g.wo; ++ox) {
              const int ix = ox * g.s - g.p + kx;
              dst[oy * g.wo + ox] = (ix >= 0 && ix < g.w) ? src[ix] : Real(0);
            }
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeom& g, const Real* cols, int first, int count, Real* dx) {
  const int positions = g.positions();
  const int stride_cols = count * positions;
  for (int ci = 0; ci < g.c; ++ci) {
    for (int ky = 0; ky < g.k; ++ky) {
      for (int kx = 0; kx < g.k; ++kx) {
        const int row = (ci * g.k + ky) * g.k + kx;
        const Real* src_row = cols + static_cast<std::size_t>(row) * stride_cols;
        for (int ln = 0; ln < count; ++ln) {
          Real* plane = dx + (static_cast<std::size_t>(first + ln) * g.c + ci) * g.h * g.w;
          const Real* src = src_row + ln * positions;
          for (int oy = 0; oy < g.ho; ++oy) {
            const int iy = oy * g.s - g.p + ky;
            if (iy < 0 || iy >= g.h) continue;
            Real* dst = plane + iy * g.w;
            for (int ox = 0; ox < g.wo; ++ox) {
              const int ix = ox * g.s - g.p + kx;
              if (ix >= 0 && ix < g.w) dst[ix] += src[oy * g.wo + ox];
            }
          }
        }
      }
    }
  }
}

ConvGeom geometry(const Conv2d& conv, const Tensor& x) {
  ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), conv.out_channels, conv.kernel, conv.stride, conv.padding, 0, 0};
  g.ho = conv_out(g.h, g.k, g.s, g.p);
  g.wo = conv_out(g.w, g.k, g.s, g.p);
  return g;
}

Tensor conv_forward(const Conv2d& conv, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const ConvGeom g = geometry(conv, x);
  Tensor y({g.n, g.o, g.ho, g.wo});
  const int positions = g.positions();
  const int chunk = conv_chunk(g);
  // Scratch reused across calls; fresh multi-megabyte buffers cost page faults.
  thread_local std::vector<Real> cols;
  thread_local Mat out;
  ConstMatMap w(weight.ptr(), g.o, g.patch());
  for (int first = 0; first < g.n; first += chunk) {
    const int count = std::min(chunk, g.n - first);
    cols.resize(static_cast<std::size_t>(g.patch()) * count * positions);
    im2col(g, x.ptr(), first, count, cols.data());
    ConstMatMap colm(cols.data(), g.patch(), count * positions);
    out.noalias() = w * colm;
    for (int ln = 0; ln < count; ++ln) {
      for (int oc = 0; oc < g.o; ++oc) {
        Real* dst = y.ptr() + (static_cast<std::size_t>(first + ln) * g.o + oc) * positions;
        const Real* src = out.data() + static_cast<std::size_t>(oc) * count * positions + ln * positions;
        const Real b = bias[static_cast<std::size_t>(oc)];
        for (int p = 0; p < positions; ++p) dst[p] = src[p] + b;
      }
    }
  }
  return y;
}

// Returns dx; accumulates into dweight / dbias.
Tensor conv_backward(const Conv2d& conv, const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor& dweight,
                     Tensor& dbias) {
  const ConvGeom g = geometry(conv, x);
  Tensor dx(x.shape());
  const int positions = g.positions();
  const int chunk = conv_chunk(g);
  thread_local std::vector<Real> cols, dcols;
  thread_local Mat dym;
  ConstMatMap w(weight.ptr(), g.o, g.patch());
  MatMap dw(dweight.ptr(), g.o, g.patch());
  for (int first = 0; first < g.n; first += chunk) {
    const int count = std::min(chunk, g.n - first);
    cols.resize(static_cast<std::size_t>(g.patch()) * count * positions);
    im2col(g, x.ptr(), first, count, cols.data());
    dym.resize(g.o, count * positions);
    for (int ln = 0; ln < count; ++ln) {
      for (int oc = 0; oc < g.o; ++oc) {
        const Real* src = dy.ptr() + (static_cast<std::size_t>(first + ln) * g.o + oc) * positions;
        std::copy_n(src, positions, dym.data() + static_cast<std::size_t>(oc) * count * positions + ln * positions);
      }
    }
    ConstMatMap colm(cols.data(), g.patch(), count * positions);
    dw.noalias() += dym * colm.transpose();
    for (int oc = 0; oc < g.o; ++oc) {
      double s = 0.0;
      const Real* row = dym.data() + static_cast<std::size_t>(oc) * count * positions;
      for (int j = 0; j < count * positions; ++j) s += row[j];
      dbias[static_cast<std::size_t>(oc)] += static_cast<Real>(s);
    }
    dcols.resize(cols.size());
    MatMap dcolm(dcols.data(), g.patch(), count * positions);
    dcolm.noalias() = w.transpose() * dym;
    col2im_add(g, dcols.data(), first, count, dx.ptr());
  }
  return dx;
}

Tensor dense_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  const int n = x.dim(0), in = weight.dim(1), out = weight.dim(0);
  Tensor y({n, out});
  ConstMatMap xm(x.ptr(), n, in);
  ConstMatMap wm(weight.ptr(), out, in);
  MatMap ym(y.ptr(), n, out);
  ym.noalias() = xm * wm.transpose();
  ConstVecMap b(bias.ptr(), out);
  ym.rowwise() += b.transpose();
  return y;
}

Tensor dense_backward(const Tensor& x, const Tensor& weight, const Tensor& dy, Tensor& dweight, Tensor& dbias) {
  const int n = x.dim(0), in = weight.dim(1), out = weight.dim(0);
  ConstMatMap xm(x.ptr(), n, in);
  ConstMatMap wm(weight.ptr(), out, in);
  ConstMatMap dym(dy.ptr(), n, out);
  MatMap dwm(dweight.ptr(), out, in);
  dwm.noalias() += dym.transpose() * xm;
  for (int j = 0; j < out; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += dy[static_cast<std::size_t>(i) * out + j];
    dbias[static_cast<std::size_t>(j)] += static_cast<Real>(s);
  }
  Tensor dx({n, in});
  MatMap dxm(dx.ptr(), n, in);
  dxm.noalias() = dym * wm;
  return dx;
}

Tensor elu_forward(const Tensor& x) {
  Tensor y(x.shape());
  const Eigen::Index n = static_cast<Eigen::Index>(x.size());
  Eigen::Map<const Eigen::Array<Real, Eigen::Dynamic, 1>> xa(x.ptr(), n);
  Eigen::Map<Eigen::Array<Real, Eigen::Dynamic, 1>> ya(y.ptr(), n);
  ya = (xa >= Real(0)).select(xa, xa.min(Real(0)).exp() - Real(1));
  return y;
}

Tensor elu_backward(const Tensor& x, const Tensor& y, const Tensor& dy) {
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] >= Real(0) ? dy[i] : dy[i] * (y[i] + Real(1));
  return dx;
}

Tensor relu_forward(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > Real(0) ? x[i] : Real(0);
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > Real(0) ? dy[i] : Real(0);
  return dx;
}

Tensor softmax_forward(const SoftmaxHead& head, const Tensor& x) {
  Tensor y(x.shape());
  const int n = x.dim(0);
  const int width = x.dim(1);
  for (int i = 0; i < n; ++i) {
    auto in = x.row(i);
    auto out = y.row(i);
    int offset = 0;
    for (int gsize : head.groups) {
      Real mx = in[static_cast<std::size_t>(offset)];
      for (int j = 1; j < gsize; ++j) mx = std::max(mx, in[static_cast<std::size_t>(offset + j)]);
      double denom = 0.0;
      for (int j = 0; j < gsize; ++j) denom += std::exp(static_cast<double>(in[static_cast<std::size_t>(offset + j)] - mx));
      const double log_denom = std::log(denom);
      for (int j = 0; j < gsize; ++j) {
        const double z = static_cast<double>(in[static_cast<std::size_t>(offset + j)] - mx);
        out[static_cast<std::size_t>(offset + j)] =
            static_cast<Real>(head.log_space ? z - log_denom : std::exp(z) / denom);
      }
      offset += gsize;
    }
    for (int j = offset; j < width; ++j) out[static_cast<std::size_t>(j)] = in[static_cast<std::size_t>(j)];
  }
  return y;
}

Tensor softmax_backward(const SoftmaxHead& head, const Tensor& y, const Tensor& dy) {
  Tensor dx(y.shape());
  const int n = y.dim(0);
  const int width = y.dim(1);
  for (int i = 0; i < n; ++i) {
    auto out = y.row(i);
    auto g = dy.row(i);
    auto d = dx.row(i);
    int offset = 0;
    for (int gsize : head.groups) {
      if (head.log_space) {
        double gsum = 0.0;
        for (int j = 0; j < gsize; ++j) gsum += g[static_cast<std::size_t>(offset + j)];
        for (int j = 0; j < gsize; ++j) {
          const auto k = static_cast<std::size_t>(offset + j);
          d[k] = static_cast<Real>(g[k] - std::exp(static_cast<double>(out[k])) * gsum);
        }
      } else {
        double dot = 0.0;
        for (int j = 0; j < gsize; ++j) {
          const auto k = static_cast<std::size_t>(offset + j);
          dot += static_cast<double>(g[k]) * out[k];
        }
        for (int j = 0; j < gsize; ++j) {
          const auto k = static_cast<std::size_t>(offset + j);
          d[k] = static_cast<Real>(out[k] * (g[k] - dot));
        }
      }
      offset += gsize;
    }
    for (int j = offset; j < width; ++j) d[static_cast<std::size_t>(j)] = g[static_cast<std::size_t>(j)];
  }
  return dx;
}

Tensor shortcut_forward(const ResidualBlock& block, const Tensor& x, int ho, int wo) {
  if (block.in_channels == block.out_channels && block.stride == 1) return x;
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor y({n, block.out_channels, ho, wo});
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const Real* src = x.ptr() + (static_cast<std::size_t>(b) * c + ch) * h * w;
      Real* dst = y.ptr() + (static_cast<std::size_t>(b) * block.out_channels + ch) * ho * wo;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) dst[oy * wo + ox] = src[(oy * block.stride) * w + ox * block.stride];
      }
    }
  }
  return y;
}

void shortcut_backward_add(const ResidualBlock& block, const Tensor& dy, Tensor& dx) {
  if (block.in_channels == block.out_channels && block.stride == 1) {
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
    return;
  }
  const int n = dx.dim(0), c = dx.dim(1), h = dx.dim(2), w = dx.dim(3);
  const int ho = dy.dim(2), wo = dy.dim(3);
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      Real* dst = dx.ptr() + (static_cast<std::size_t>(b) * c + ch) * h * w;
      const Real* src = dy.ptr() + (static_cast<std::size_t>(b) * block.out_channels + ch) * ho * wo;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) dst[(oy * block.stride) * w + ox * block.stride] += src[oy * wo + ox];
      }
    }
  }
}

Conv2d first_conv(const ResidualBlock& b) { return Conv2d{b.in_channels, b.out_channels, 3, b.stride, 1}; }
Conv2d second_conv(const ResidualBlock& b) { return Conv2d{b.out_channels, b.out_channels, 3, 1, 1}; }

std::string describe(std::size_t index, const LayerSpec& layer) {
  return "layer " + std::to_string(index) + " (" + std::string(kind_name(layer)) + ")";
}

}  // namespace

std::string_view kind_name(const LayerSpec& layer) {
  return std::visit(Overloaded{
                        [](const Conv2d&) { return std::string_view("conv2d"); },
                        [](const Dense&) { return std::string_view("dense"); },
                        [](const Elu&) { return std::string_view("elu"); },
                        [](const Relu&) { return std::string_view("relu"); },
                        [](const ResidualBlock&) { return std::string_view("residual-block"); },
                        [](const Flatten&) { return std::string_view("flatten"); },
                        [](const SoftmaxHead&) { return std::string_view("softmax-head"); },
                    },
                    layer);
}

Stack::Stack(std::string prefix, Shape input_shape, std::vector<LayerSpec> layers)
    : prefix_(std::move(prefix)), input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  shapes_.push_back(input_shape_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Shape& in = shapes_.back();
    const std::string where = prefix_ + " " + describe(i, layers_[i]);
    auto fail = [&](const std::string& why) { throw ShapeError(where + ": " + why + ", input " + shape_string(in)); };
    Shape out = std::visit(
        Overloaded{
            [&](const Conv2d& c) -> Shape {
              if (in.size() != 3) fail("expects a (C, H, W) input");
              if (in[0] != c.in_channels) fail("expects " + std::to_string(c.in_channels) + " channels");
              if (c.kernel < 1 || c.stride < 1 || c.padding < 0) fail("invalid kernel/stride/padding");
              const int ho = conv_out(in[1], c.kernel, c.stride, c.padding);
              const int wo = conv_out(in[2], c.kernel, c.stride, c.padding);
              if (ho < 1 || wo < 1) fail("kernel larger than input");
              return {c.out_channels, ho, wo};
            },
            [&](const Dense& d) -> Shape {
              if (in.size() != 1) fail("expects a flat input");
              if (in[0] != d.in_features) fail("expects " + std::to_string(d.in_features) + " features");
              return {d.out_features};
            },
            [&](const Elu&) -> Shape { return in; },
            [&](const Relu&) -> Shape { return in; },
            [&](const ResidualBlock& r) -> Shape {
              if (in.size() != 3) fail("expects a (C, H, W) input");
              if (in[0] != r.in_channels) fail("expects " + std::to_string(r.in_channels) + " channels");
              if (r.out_channels < r.in_channels) fail("shortcut cannot reduce channels");
              return {r.out_channels, conv_out(in[1], 3, r.stride, 1), conv_out(in[2], 3, r.stride, 1)};
            },
            [&](const Flatten&) -> Shape { return {static_cast<int>(shape_size(in))}; },
            [&](const SoftmaxHead& s) -> Shape {
              if (in.size() != 1) fail("expects a flat input");
              int total = s.passthrough;
              for (int gsz : s.groups) {
                if (gsz < 1) fail("empty softmax group");
                total += gsz;
              }
              if (total != in[0]) fail("group sizes sum to " + std::to_string(total));
              return in;
            },
        },
        layers_[i]);
    shapes_.push_back(std::move(out));
  }
}

std::string Stack::param_name(std::size_t layer, std::string_view suffix) const {
  return prefix_ + "." + std::to_string(layer) + "." + std::string(kind_name(layers_[layer])) + "." +
         std::string(suffix);
}

std::vector<ParamInfo> Stack::parameter_layout() const {
  std::vector<ParamInfo> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    std::visit(Overloaded{
                   [&](const Conv2d& c) {
                     out.push_back({param_name(i, "weight"), {c.out_channels, c.in_channels, c.kernel, c.kernel},
                                    c.in_channels * c.kernel * c.kernel});
                     out.push_back({param_name(i, "bias"), {c.out_channels}, 0});
                   },
                   [&](const Dense& d) {
                     out.push_back({param_name(i, "weight"), {d.out_features, d.in_features}, d.in_features});
                     out.push_back({param_name(i, "bias"), {d.out_features}, 0});
                   },
                   [&](const ResidualBlock& r) {
                     out.push_back({param_name(i, "conv1.weight"), {r.out_channels, r.in_channels, 3, 3},
                                    r.in_channels * 9});
                     out.push_back({param_name(i, "conv1.bias"), {r.out_channels}, 0});
                     out.push_back({param_name(i, "conv2.weight"), {r.out_channels, r.out_channels, 3, 3},
                                    r.out_channels * 9});
                     out.push_back({param_name(i, "conv2.bias"), {r.out_channels}, 0});
                   },
                   [](const auto&) {},
               },
               layers_[i]);
  }
  return out;
}

std::size_t Stack::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameter_layout()) n += shape_size(p.shape);
  return n;
}

void Stack::init_parameters(ParameterSet& params, Rng& rng) const {
  for (const auto& info : parameter_layout()) {
    Tensor t(info.shape);
    if (info.fan_in > 0) init_fan_in_uniform(t, info.fan_in, rng);
    params.add(info.name, std::move(t));
  }
}

void Stack::check_input(const Tensor& input) const {
  if (input.rank() != static_cast<int>(input_shape_.size()) + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), input.shape().begin() + 1)) {
    throw ShapeError(prefix_ + " layer 0 (" + (layers_.empty() ? std::string("input") : std::string(kind_name(layers_[0]))) +
                     "): expected batch of " + shape_string(input_shape_) + ", got " + shape_string(input.shape()));
  }
}

Tensor Stack::forward(const ParameterSet& params, const Tensor& input, Tape* tape) const {
  check_input(input);
  const int n = input.dim(0);
  if (tape) {
    *tape = Tape{};
    tape->stack_ = this;
    tape->params_ = &params;
    tape->params_id_ = params.id();
    tape->params_version_ = params.version();
    tape->caches_.resize(layers_.size());
  }
  Tensor x = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Tensor y = std::visit(
        Overloaded{
            [&](const Conv2d& c) {
              return conv_forward(c, x, params.value(param_name(i, "weight")), params.value(param_name(i, "bias")));
            },
            [&](const Dense&) {
              return dense_forward(x, params.value(param_name(i, "weight")), params.value(param_name(i, "bias")));
            },
            [&](const Elu&) { return elu_forward(x); },
            [&](const Relu&) { return relu_forward(x); },
            [&](const ResidualBlock& r) {
              Tensor h1 = conv_forward(first_conv(r), x, params.value(param_name(i, "conv1.weight")),
                                       params.value(param_name(i, "conv1.bias")));
              Tensor a1 = relu_forward(h1);
              Tensor h2 = conv_forward(second_conv(r), a1, params.value(param_name(i, "conv2.weight")),
                                       params.value(param_name(i, "conv2.bias")));
              Tensor sc = shortcut_forward(r, x, h2.dim(2), h2.dim(3));
              for (std::size_t j = 0; j < h2.size(); ++j) h2[j] += sc[j];
              Tensor out = relu_forward(h2);
              if (tape) tape->caches_[i].aux = {std::move(h1), std::move(a1), std::move(h2)};
              return out;
            },
            [&](const Flatten&) {
              Tensor y = x;
              y.reshape({n, static_cast<int>(x.size() / static_cast<std::size_t>(n))});
              return y;
            },
            [&](const SoftmaxHead& s) { return softmax_forward(s, x); },
        },
        layers_[i]);
    if (tape) {
      tape->caches_[i].input = std::move(x);
      // Only activations that backward reads are kept.
      const bool keep_output = std::holds_alternative<Elu>(layers_[i]) || std::holds_alternative<SoftmaxHead>(layers_[i]);
      if (keep_output) tape->caches_[i].output = y;
    }
    x = std::move(y);
  }
  return x;
}

Tensor Stack::backward(Tape& tape, const Tensor& output_grad, Gradients& grads) const {
  if (!tape.recorded() || tape.stack_ != this) throw std::logic_error(prefix_ + ": backward with a tape from another stack");
  if (tape.consumed_) throw std::logic_error(prefix_ + ": tape already consumed by a previous backward");
  if (tape.params_->id() != tape.params_id_ || tape.params_->version() != tape.params_version_) {
    throw std::logic_error(prefix_ + ": stale tape, parameters changed since forward");
  }
  if (grads.count() != tape.params_->count()) throw std::logic_error(prefix_ + ": gradient buffer does not match parameters");
  const ParameterSet& params = *tape.params_;
  Shape expected = output_shape();
  expected.insert(expected.begin(), tape.caches_.empty() ? output_grad.dim(0) : tape.caches_[0].input.dim(0));
  if (output_grad.shape() != expected) {
    throw ShapeError(prefix_ + ": output gradient " + shape_string(output_grad.shape()) + " does not match output " +
                     shape_string(expected));
  }
  tape.consumed_ = true;

  Tensor g = output_grad;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    auto& cache = tape.caches_[li];
    const Tensor& x = cache.input;
    g = std::visit(
        Overloaded{
            [&](const Conv2d& c) {
              const std::size_t wi = params.index_of(param_name(li, "weight"));
              const std::size_t bi = params.index_of(param_name(li, "bias"));
              return conv_backward(c, x, params.value(wi), g, grads[wi], grads[bi]);
            },
            [&](const Dense&) {
              const std::size_t wi = params.index_of(param_name(li, "weight"));
              const std::size_t bi = params.index_of(param_name(li, "bias"));
              return dense_backward(x, params.value(wi), g, grads[wi], grads[bi]);
            },
            [&](const Elu&) { return elu_backward(x, cache.output, g); },
            [&](const Relu&) { return relu_backward(x, g); },
            [&](const ResidualBlock& r) {
              const Tensor& h1 = cache.aux[0];
              const Tensor& a1 = cache.aux[1];
              const Tensor& h2 = cache.aux[2];
              Tensor dh2 = relu_backward(h2, g);
              const std::size_t w2 = params.index_of(param_name(li, "conv2.weight"));
              const std::size_t b2 = params.index_of(param_name(li, "conv2.bias"));
              Tensor da1 = conv_backward(second_conv(r), a1, params.value(w2), dh2, grads[w2], grads[b2]);
              Tensor dh1 = relu_backward(h1, da1);
              const std::size_t w1 = params.index_of(param_name(li, "conv1.weight"));
              const std::size_t b1 = params.index_of(param_name(li, "conv1.bias"));
              Tensor dx = conv_backward(first_conv(r), x, params.value(w1), dh1, grads[w1], grads[b1]);
              shortcut_backward_add(r, dh2, dx);
              return dx;
            },
            [&](const Flatten&) {
              Tensor dx = g;
              dx.reshape(x.shape());
              return dx;
            },
            [&](const SoftmaxHead& s) { return softmax_backward(s, cache.output, g); },
        },
        layers_[li]);
    cache = {};
  }
  return g;
}

ForwardResult forward(const Stack& stack, const ParameterSet& params, const Tensor& input) {
  ForwardResult r;
  r.output = stack.forward(params, input, &r.tape);
  return r;
}

BackwardResult backward(const Stack& stack, Tape& tape, const Tensor& output_grad) {
  if (!tape.recorded()) throw std::logic_error(stack.prefix() + ": backward without a recorded tape");
  BackwardResult r;
  r.param_gradients = Gradients(*tape.parameters());
  r.input_gradient = stack.backward(tape, output_grad, r.param_gradients);
  return r;
}

}  // namespace curioflock::nn
