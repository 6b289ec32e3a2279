// Copyright 2026 The xmodal Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xmodal/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace xmodal {

std::string shape_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <typename T>
using StridedMap = Eigen::Map<MatRM<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const MatRM<T>, 0, Eigen::OuterStride<>>;

constexpr int kKernel = 3;

// Output rows per im2col block, sized so one block of columns stays in cache.
int row_block(int k, int oh, int ow) {
  constexpr size_t kTargetElements = 1 << 16;
  const size_t per_row = size_t(k) * ow;
  return std::clamp(static_cast<int>(kTargetElements / std::max<size_t>(per_row, 1)), 1, oh);
}

int conv_extent(int n, int stride, int padding) { return (n + 2 * padding - kKernel) / stride + 1; }

template <typename T>
void im2col(const T* in, int channels, int h, int w, int stride, int pad, int oy0, int oy1, int ow,
            T* col) {
  const size_t p = size_t(oy1 - oy0) * ow;
  for (int c = 0; c < channels; ++c) {
    const T* plane = in + size_t(c) * h * w;
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        T* dst = col + (size_t(c) * 9 + ky * 3 + kx) * p;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * stride + ky - pad;
          T* row = dst + size_t(oy - oy0) * ow;
          if (iy < 0 || iy >= h) {
            std::fill(row, row + ow, T(0));
            continue;
          }
          const T* src = plane + size_t(iy) * w;
          if (stride == 1 && pad == 0) {
            std::copy(src + kx, src + kx + ow, row);
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            row[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int channels, int h, int w, int stride, int pad, int oy0, int oy1, int ow,
            T* in) {
  const size_t p = size_t(oy1 - oy0) * ow;
  for (int c = 0; c < channels; ++c) {
    T* plane = in + size_t(c) * h * w;
    for (int ky = 0; ky < kKernel; ++ky) {
      for (int kx = 0; kx < kKernel; ++kx) {
        const T* src = col + (size_t(c) * 9 + ky * 3 + kx) * p;
        for (int oy = oy0; oy < oy1; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          T* dst = plane + size_t(iy) * w;
          const T* row = src + size_t(oy - oy0) * ow;
          if (stride == 1 && pad == 0) {
            T* d = dst + kx;
            for (int ox = 0; ox < ow; ++ox) d[ox] += row[ox];
            continue;
          }
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += row[ox];
          }
        }
      }
    }
  }
}

void check_rank(const Shape& dims, size_t rank, const char* who) {
  require(dims.size() == rank, std::string(who) + " expects rank " + std::to_string(rank) +
                                   " input, got " + shape_string(dims),
          ErrorCode::kShapeMismatch);
}

}  // namespace

// ---- Conv2d ----------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(int in_channels, int out_channels, int stride, int padding)
    : in_(in_channels),
      out_(out_channels),
      stride_(stride),
      padding_(padding),
      weight_({out_channels, in_channels, kKernel, kKernel}),
      bias_({out_channels}) {
  require(stride == 1 || stride == 2, "conv stride must be 1 or 2");
  require(padding >= 0 && padding <= 1, "conv padding must be 0 or 1");
}

template <typename T>
LayerSpec Conv2d<T>::spec() const {
  return {LayerKind::kConv2d, in_, out_, stride_, padding_, 0.0f};
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
  check_rank(in, 3, "conv2d");
  require(in[0] == in_, "conv2d channel mismatch: expected " + std::to_string(in_) + ", got " +
                            std::to_string(in[0]),
          ErrorCode::kShapeMismatch);
  require(in[1] + 2 * padding_ >= kKernel && in[2] + 2 * padding_ >= kKernel,
          "conv2d input smaller than the 3x3 kernel: " + shape_string(in),
          ErrorCode::kShapeMismatch);
  return {out_, conv_extent(in[1], stride_, padding_), conv_extent(in[2], stride_, padding_)};
}

template <typename T>
void Conv2d<T>::forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) {
  check_rank(in.dims, 4, "conv2d");
  const Shape os = output_shape({in.dims[1], in.dims[2], in.dims[3]});
  const int n = in.dims[0], h = in.dims[2], w = in.dims[3];
  const int oh = os[1], ow = os[2];
  const int k = in_ * 9;
  const int block = row_block(k, oh, ow);
  input_ = in;
  out = Tensor<T>({n, out_, oh, ow});
  std::vector<T> col(size_t(k) * block * ow);
  Eigen::Map<const MatRM<T>> wm(weight_.value.ptr(), out_, k);
  Eigen::Map<const VecX<T>> bm(bias_.value.ptr(), out_);
  const Eigen::Index p = Eigen::Index(oh) * ow;
  for (int b = 0; b < n; ++b) {
    for (int y0 = 0; y0 < oh; y0 += block) {
      const int y1 = std::min(oh, y0 + block);
      const Eigen::Index pc = Eigen::Index(y1 - y0) * ow;
      im2col(in.ptr() + b * in.stride0(), in_, h, w, stride_, padding_, y0, y1, ow, col.data());
      Eigen::Map<const MatRM<T>> cm(col.data(), k, pc);
      StridedMap<T> om(out.ptr() + b * out.stride0() + Eigen::Index(y0) * ow, out_, pc,
                       Eigen::OuterStride<>(p));
      om.noalias() = wm * cm;
      om.colwise() += bm;
    }
  }
}

template <typename T>
void Conv2d<T>::backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) {
  const int n = input_.dims[0], h = input_.dims[2], w = input_.dims[3];
  const int oh = grad_out.dims[2], ow = grad_out.dims[3];
  const int k = in_ * 9;
  const int block = row_block(k, oh, ow);
  std::vector<T> col(size_t(k) * block * ow);
  std::vector<T> dcol;
  if (grad_in) {
    *grad_in = Tensor<T>(input_.dims);
    dcol.resize(col.size());
  }
  Eigen::Map<const MatRM<T>> wm(weight_.value.ptr(), out_, k);
  Eigen::Map<MatRM<T>> dw(weight_.grad.ptr(), out_, k);
  Eigen::Map<VecX<T>> db(bias_.grad.ptr(), out_);
  const Eigen::Index p = Eigen::Index(oh) * ow;
  for (int b = 0; b < n; ++b) {
    for (int y0 = 0; y0 < oh; y0 += block) {
      const int y1 = std::min(oh, y0 + block);
      const Eigen::Index pc = Eigen::Index(y1 - y0) * ow;
      im2col(input_.ptr() + b * input_.stride0(), in_, h, w, stride_, padding_, y0, y1, ow,
             col.data());
      Eigen::Map<const MatRM<T>> cm(col.data(), k, pc);
      ConstStridedMap<T> gm(grad_out.ptr() + b * grad_out.stride0() + Eigen::Index(y0) * ow, out_,
                            pc, Eigen::OuterStride<>(p));
      dw.noalias() += gm * cm.transpose();
      db += gm.rowwise().sum();
      if (grad_in) {
        Eigen::Map<MatRM<T>> dc(dcol.data(), k, pc);
        dc.noalias() = wm.transpose() * gm;
        col2im(dcol.data(), in_, h, w, stride_, padding_, y0, y1, ow,
               grad_in->ptr() + b * grad_in->stride0());
      }
    }
  }
}

// ---- MaxPool2x2 --------------------------------------------------------------

template <typename T>
Shape MaxPool2x2<T>::output_shape(const Shape& in) const {
  check_rank(in, 3, "maxpool2x2");
  require(in[1] >= 2 && in[2] >= 2, "maxpool2x2 input too small", ErrorCode::kShapeMismatch);
  return {in[0], in[1] / 2, in[2] / 2};
}

template <typename T>
void MaxPool2x2<T>::forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) {
  check_rank(in.dims, 4, "maxpool2x2");
  const Shape os = output_shape({in.dims[1], in.dims[2], in.dims[3]});
  const int n = in.dims[0], c = in.dims[1], h = in.dims[2], w = in.dims[3];
  const int oh = os[1], ow = os[2];
  in_dims_ = in.dims;
  out = Tensor<T>({n, c, oh, ow});
  argmax_.assign(out.size(), 0);
  size_t o = 0;
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      const size_t base = (size_t(b) * c + ch) * h * w;
      for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x, ++o) {
          size_t best = base + size_t(2 * y) * w + 2 * x;
          T best_v = in.data[best];
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const size_t idx = base + size_t(2 * y + dy) * w + 2 * x + dx;
              if (in.data[idx] > best_v) {
                best_v = in.data[idx];
                best = idx;
              }
            }
          }
          out.data[o] = best_v;
          argmax_[o] = static_cast<uint32_t>(best);
        }
      }
    }
  }
}

template <typename T>
void MaxPool2x2<T>::backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) {
  if (!grad_in) return;
  *grad_in = Tensor<T>(in_dims_);
  for (size_t o = 0; o < grad_out.size(); ++o) grad_in->data[argmax_[o]] += grad_out.data[o];
}

// ---- ReLU ------------------------------------------------------------------

template <typename T>
void ReLU<T>::forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) {
  out.dims = in.dims;
  out.data.resize(in.size());
  for (size_t i = 0; i < in.size(); ++i) out.data[i] = in.data[i] > T(0) ? in.data[i] : T(0);
  output_ = out;
}

template <typename T>
void ReLU<T>::backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) {
  if (!grad_in) return;
  grad_in->dims = grad_out.dims;
  grad_in->data.resize(grad_out.size());
  for (size_t i = 0; i < grad_out.size(); ++i) {
    grad_in->data[i] = output_.data[i] > T(0) ? grad_out.data[i] : T(0);
  }
}

// ---- Dropout ---------------------------------------------------------------

template <typename T>
Dropout<T>::Dropout(float rate) : rate_(rate) {
  require(rate >= 0.0f && rate < 1.0f, "dropout rate must lie in [0, 1)");
}

template <typename T>
LayerSpec Dropout<T>::spec() const {
  LayerSpec s{LayerKind::kDropout};
  s.rate = rate_;
  return s;
}

template <typename T>
void Dropout<T>::forward(const Tensor<T>& in, Tensor<T>& out, Mode mode, Rng& rng) {
  out = in;
  active_ = mode == Mode::kTraining && rate_ > 0.0f;
  if (!active_) return;
  if (!(frozen_ && mask_.size() == in.size())) {
    mask_.resize(in.size());
    const T keep = T(1) / (T(1) - T(rate_));
    for (auto& m : mask_) m = rng.uniform() >= rate_ ? keep : T(0);
  }
  for (size_t i = 0; i < out.size(); ++i) out.data[i] *= mask_[i];
}

template <typename T>
void Dropout<T>::backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) {
  if (!grad_in) return;
  *grad_in = grad_out;
  if (!active_) return;
  for (size_t i = 0; i < grad_in->size(); ++i) grad_in->data[i] *= mask_[i];
}

// ---- Dense -----------------------------------------------------------------

template <typename T>
Dense<T>::Dense(int in_features, int units)
    : in_(in_features), out_(units), weight_({units, in_features}), bias_({units}) {}

template <typename T>
LayerSpec Dense<T>::spec() const {
  return {LayerKind::kDense, in_, out_, 1, 0, 0.0f};
}

template <typename T>
Shape Dense<T>::output_shape(const Shape& in) const {
  require(static_cast<int>(shape_size(in)) == in_,
          "dense expects " + std::to_string(in_) + " features, got " + shape_string(in),
          ErrorCode::kShapeMismatch);
  return {out_};
}

template <typename T>
void Dense<T>::forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) {
  require(!in.dims.empty() && static_cast<int>(in.stride0()) == in_,
          "dense input width mismatch: " + shape_string(in.dims), ErrorCode::kShapeMismatch);
  const int n = in.dims[0];
  input_ = in;
  out = Tensor<T>({n, out_});
  Eigen::Map<const MatRM<T>> x(in.ptr(), n, in_);
  Eigen::Map<const MatRM<T>> wm(weight_.value.ptr(), out_, in_);
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bm(bias_.value.ptr(), out_);
  Eigen::Map<MatRM<T>> y(out.ptr(), n, out_);
  y.noalias() = x * wm.transpose();
  y.rowwise() += bm;
}

template <typename T>
void Dense<T>::backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) {
  const int n = input_.dims[0];
  Eigen::Map<const MatRM<T>> x(input_.ptr(), n, in_);
  Eigen::Map<const MatRM<T>> g(grad_out.ptr(), n, out_);
  Eigen::Map<const MatRM<T>> wm(weight_.value.ptr(), out_, in_);
  Eigen::Map<MatRM<T>> dw(weight_.grad.ptr(), out_, in_);
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(bias_.grad.ptr(), out_);
  dw.noalias() += g.transpose() * x;
  db += g.colwise().sum();
  if (grad_in) {
    *grad_in = Tensor<T>(input_.dims);
    Eigen::Map<MatRM<T>> dx(grad_in->ptr(), n, in_);
    dx.noalias() = g * wm;
  }
}

// ---- Softmax ---------------------------------------------------------------

template <typename T>
std::vector<T> softmax_row(std::span<const T> z) {
  T m = -std::numeric_limits<T>::infinity();
  for (T v : z) m = std::max(m, v);
  std::vector<T> p(z.size());
  T sum = 0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

template <typename T>
void Softmax<T>::forward(const Tensor<T>& in, Tensor<T>& out, Mode, Rng&) {
  out = in;
  const size_t k = in.stride0();
  for (int b = 0; b < in.batch(); ++b) {
    const auto p = softmax_row<T>(std::span<const T>(in.ptr() + b * k, k));
    std::copy(p.begin(), p.end(), out.ptr() + b * k);
  }
  output_ = out;
}

template <typename T>
void Softmax<T>::backward(const Tensor<T>& grad_out, Tensor<T>* grad_in) {
  if (!grad_in) return;
  *grad_in = grad_out;
  const size_t k = grad_out.stride0();
  for (int b = 0; b < grad_out.batch(); ++b) {
    const T* y = output_.ptr() + b * k;
    const T* g = grad_out.ptr() + b * k;
    T dot = 0;
    for (size_t i = 0; i < k; ++i) dot += g[i] * y[i];
    for (size_t i = 0; i < k; ++i) grad_in->data[b * k + i] = y[i] * (g[i] - dot);
  }
}

// ---- factory and functional forms -------------------------------------------

template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& s) {
  switch (s.kind) {
    case LayerKind::kConv2d: return std::make_unique<Conv2d<T>>(s.in, s.out, s.stride, s.padding);
    case LayerKind::kMaxPool2x2: return std::make_unique<MaxPool2x2<T>>();
    case LayerKind::kReLU: return std::make_unique<ReLU<T>>();
    case LayerKind::kDropout: return std::make_unique<Dropout<T>>(s.rate);
    case LayerKind::kDense: return std::make_unique<Dense<T>>(s.in, s.out);
    case LayerKind::kSoftmax: return std::make_unique<Softmax<T>>();
  }
  fail(ErrorCode::kFormat, "unknown layer kind");
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                 int stride, int padding) {
  check_rank(weights.dims, 4, "conv2d weights");
  require(weights.dims[2] == kKernel && weights.dims[3] == kKernel, "conv2d kernel must be 3x3",
          ErrorCode::kShapeMismatch);
  require(bias.size() == size_t(weights.dims[0]), "conv2d bias size mismatch",
          ErrorCode::kShapeMismatch);
  Conv2d<T> layer(weights.dims[1], weights.dims[0], stride, padding);
  layer.weight().value.data = weights.data;
  layer.bias().value.data = bias.data;
  Tensor<T> in = input;
  if (in.dims.size() == 3) in.reshape({1, in.dims[0], in.dims[1], in.dims[2]});
  Tensor<T> out;
  Rng rng(0);
  layer.forward(in, out, Mode::kInference, rng);
  if (input.dims.size() == 3) out.reshape({out.dims[1], out.dims[2], out.dims[3]});
  return out;
}

template <typename T>
Tensor<T> maxpool2x2(const Tensor<T>& input) {
  MaxPool2x2<T> layer;
  Tensor<T> in = input;
  if (in.dims.size() == 3) in.reshape({1, in.dims[0], in.dims[1], in.dims[2]});
  Tensor<T> out;
  Rng rng(0);
  layer.forward(in, out, Mode::kInference, rng);
  if (input.dims.size() == 3) out.reshape({out.dims[1], out.dims[2], out.dims[3]});
  return out;
}

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  check_rank(weights.dims, 2, "dense weights");
  require(bias.size() == size_t(weights.dims[0]), "dense bias size mismatch",
          ErrorCode::kShapeMismatch);
  Dense<T> layer(weights.dims[1], weights.dims[0]);
  layer.weight().value.data = weights.data;
  layer.bias().value.data = bias.data;
  Tensor<T> in = input;
  if (in.dims.size() == 1) in.reshape({1, in.dims[0]});
  Tensor<T> out;
  Rng rng(0);
  layer.forward(in, out, Mode::kInference, rng);
  if (input.dims.size() == 1) out.reshape({out.dims[1]});
  return out;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& input, float rate, Mode mode, uint64_t seed) {
  Dropout<T> layer(rate);
  Tensor<T> out;
  Rng rng(seed);
  layer.forward(input, out, mode, rng);
  return out;
}

template <typename T>
LossResult<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> targets) {
  check_rank(logits.dims, 2, "softmax_cross_entropy");
  const int n = logits.dims[0], k = logits.dims[1];
  require(targets.size() == size_t(n), "one target per row required", ErrorCode::kShapeMismatch);
  LossResult<T> r;
  r.grad = Tensor<T>(logits.dims);
  for (int b = 0; b < n; ++b) {
    require(targets[b] >= 0 && targets[b] < k, "target class out of range");
    const T* z = logits.ptr() + size_t(b) * k;
    for (int i = 0; i < k; ++i) require(std::isfinite(double(z[i])), "logit is not finite");
    const auto p = softmax_row<T>(std::span<const T>(z, k));
    T m = *std::max_element(z, z + k);
    double lse = 0.0;
    for (int i = 0; i < k; ++i) lse += std::exp(double(z[i]) - double(m));
    r.loss += -(double(z[targets[b]]) - double(m) - std::log(lse));
    for (int i = 0; i < k; ++i) {
      r.grad.data[size_t(b) * k + i] = (p[i] - (i == targets[b] ? T(1) : T(0))) / T(n);
    }
  }
  r.loss /= n;
  return r;
}

template <typename T>
LossResult<T> softmax_cross_entropy_counts(const Tensor<T>& logits, std::span<const T> counts) {
  check_rank(logits.dims, 2, "softmax_cross_entropy_counts");
  const int n = logits.dims[0], k = logits.dims[1];
  require(counts.size() == logits.size(), "counts must match logits", ErrorCode::kShapeMismatch);
  double total = 0.0;
  for (T c : counts) {
    require(c >= T(0), "response counts must be nonnegative");
    total += c;
  }
  require(total > 0.0, "response counts are all zero");
  LossResult<T> r;
  r.grad = Tensor<T>(logits.dims);
  for (int b = 0; b < n; ++b) {
    const T* z = logits.ptr() + size_t(b) * k;
    const T* c = counts.data() + size_t(b) * k;
    const auto p = softmax_row<T>(std::span<const T>(z, k));
    const T m = *std::max_element(z, z + k);
    double lse = 0.0;
    for (int i = 0; i < k; ++i) lse += std::exp(double(z[i]) - double(m));
    const double log_norm = double(m) + std::log(lse);
    double row_total = 0.0;
    for (int i = 0; i < k; ++i) {
      row_total += c[i];
      if (c[i] > T(0)) r.loss += double(c[i]) * (log_norm - double(z[i]));
    }
    for (int i = 0; i < k; ++i) {
      r.grad.data[size_t(b) * k + i] = static_cast<T>((row_total * p[i] - c[i]) / total);
    }
  }
  r.loss /= total;
  return r;
}

#define XMODAL_INSTANTIATE(T)                                                                   \
  template class Conv2d<T>;                                                                     \
  template class MaxPool2x2<T>;                                                                 \
  template class ReLU<T>;                                                                       \
  template class Dropout<T>;                                                                    \
  template class Dense<T>;                                                                      \
  template class Softmax<T>;                                                                    \
  template std::unique_ptr<Layer<T>> make_layer<T>(const LayerSpec&);                           \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int); \
  template Tensor<T> maxpool2x2<T>(const Tensor<T>&);                                           \
  template Tensor<T> dense<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);            \
  template Tensor<T> dropout<T>(const Tensor<T>&, float, Mode, uint64_t);                       \
  template LossResult<T> softmax_cross_entropy<T>(const Tensor<T>&, std::span<const int>);      \
  template LossResult<T> softmax_cross_entropy_counts<T>(const Tensor<T>&, std::span<const T>); \
  template std::vector<T> softmax_row<T>(std::span<const T>);

XMODAL_INSTANTIATE(float)
XMODAL_INSTANTIATE(double)

#undef XMODAL_INSTANTIATE

}  // namespace xmodal
