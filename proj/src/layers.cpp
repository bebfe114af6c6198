// Copyright 2026 The mffseg Authors. All Rights Reserved.
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

#include "mffseg/layers.hpp"

#include <cmath>
#include <limits>

#include "kernels.hpp"

namespace mffseg::nn {

namespace {

void require_trained(bool cached, const char* layer) {
    if (!cached) throw Error(ErrorKind::Runtime, std::string(layer) + ": backward called without a Train-phase forward");
}

template <typename T>
void he_normal(Tensor<T>& w, double fan_out, Rng& rng) {
    const double stddev = std::sqrt(2.0 / fan_out);
    for (auto& v : w.values()) v = static_cast<T>(stddev * standard_normal(rng));
}

}  // namespace

// ---------------------------------------------------------------- Conv2d

template <typename T>
Conv2d<T>::Conv2d(ConvSpec spec) : spec_(spec) {
    MFFSEG_CHECK(spec.in_channels > 0 && spec.out_channels > 0 && spec.kernel > 0 && spec.stride > 0,
                 ShapeError, "Conv2d: channel counts, kernel and stride must be positive");
    weight_ = Param<T>({1, 1, spec.out_channels, spec.in_channels * spec.kernel * spec.kernel});
    if (spec.bias) bias_ = Param<T>({1, spec.out_channels, 1, 1});
}

template <typename T>
Shape Conv2d<T>::output_shape(const Shape& in) const {
    const int oh = (in.h + 2 * spec_.padding - spec_.kernel) / spec_.stride + 1;
    const int ow = (in.w + 2 * spec_.padding - spec_.kernel) / spec_.stride + 1;
    return {in.n, spec_.out_channels, oh, ow};
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Phase phase) {
    MFFSEG_CHECK(x.c() == spec_.in_channels, ShapeError,
                 "Conv2d: expected " + std::to_string(spec_.in_channels) + " input channels, got " +
                     x.shape().str());
    MFFSEG_CHECK(x.h() + 2 * spec_.padding >= spec_.kernel && x.w() + 2 * spec_.padding >= spec_.kernel,
                 ShapeError, "Conv2d: input " + x.shape().str() + " smaller than kernel");
    const Shape out = output_shape(x.shape());
    Tensor<T> y(out);
    const int ckk = spec_.in_channels * spec_.kernel * spec_.kernel;
    const int grid = out.h * out.w;
    const bool pointwise = spec_.kernel == 1 && spec_.stride == 1 && spec_.padding == 0;
    std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(ckk) * grid);
    const detail::PatchGeometry g{x.c(), x.h(), x.w(), spec_.kernel, spec_.stride, spec_.padding, out.h, out.w};
    for (int n = 0; n < x.n(); ++n) {
        const T* src = x.sample(n);
        if (!pointwise) {
            detail::im2col(src, g, col.data());
            src = col.data();
        }
        detail::gemm(false, false, spec_.out_channels, grid, ckk, weight_.value.data(), src, y.sample(n), false);
        if (spec_.bias) {
            for (int c = 0; c < out.c; ++c) {
                T* p = y.plane(n, c);
                const T b = bias_.value.data()[c];
                for (int i = 0; i < grid; ++i) p[i] += b;
            }
        }
    }
    if (phase == Phase::Train) input_ = x;
    return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& dy) {
    require_trained(!input_.empty(), "Conv2d");
    const Shape in = input_.shape();
    const Shape out = output_shape(in);
    MFFSEG_CHECK(dy.shape() == out, ShapeError, "Conv2d backward: gradient shape " + dy.shape().str());
    Tensor<T> dx(in);
    const int ckk = spec_.in_channels * spec_.kernel * spec_.kernel;
    const int grid = out.h * out.w;
    const bool pointwise = spec_.kernel == 1 && spec_.stride == 1 && spec_.padding == 0;
    std::vector<T> col(pointwise ? 0 : static_cast<std::size_t>(ckk) * grid);
    std::vector<T> dcol(pointwise ? 0 : static_cast<std::size_t>(ckk) * grid);
    const detail::PatchGeometry g{in.c, in.h, in.w, spec_.kernel, spec_.stride, spec_.padding, out.h, out.w};
    for (int n = 0; n < in.n; ++n) {
        const T* src = input_.sample(n);
        if (!pointwise) {
            detail::im2col(src, g, col.data());
            src = col.data();
        }
        detail::gemm(false, true, spec_.out_channels, ckk, grid, dy.sample(n), src, weight_.grad.data(), true);
        if (spec_.bias) {
            for (int c = 0; c < out.c; ++c) {
                const T* p = dy.plane(n, c);
                double acc = 0.0;
                for (int i = 0; i < grid; ++i) acc += p[i];
                bias_.grad.data()[c] += static_cast<T>(acc);
            }
        }
        if (pointwise) {
            detail::gemm(true, false, ckk, grid, spec_.out_channels, weight_.value.data(), dy.sample(n),
                         dx.sample(n), false);
        } else {
            detail::gemm(true, false, ckk, grid, spec_.out_channels, weight_.value.data(), dy.sample(n),
                         dcol.data(), false);
            detail::col2im(dcol.data(), g, dx.sample(n));
        }
    }
    input_ = Tensor<T>();
    return dx;
}

template <typename T>
void Conv2d<T>::init(Rng& rng) {
    he_normal(weight_.value, static_cast<double>(spec_.out_channels) * spec_.kernel * spec_.kernel, rng);
    if (spec_.bias) bias_.value.fill(T{});
}

template <typename T>
void Conv2d<T>::collect(const std::string& prefix, ParamRefs<T>& refs) {
    refs.params.push_back({prefix + ".weight", &weight_});
    if (spec_.bias) refs.params.push_back({prefix + ".bias", &bias_});
}

// ------------------------------------------------------- ConvTranspose2d

template <typename T>
ConvTranspose2d<T>::ConvTranspose2d(DeconvSpec spec) : spec_(spec) {
    MFFSEG_CHECK(spec.in_channels > 0 && spec.out_channels > 0 && spec.kernel > 0 && spec.stride > 0,
                 ShapeError, "ConvTranspose2d: channel counts, kernel and stride must be positive");
    MFFSEG_CHECK(spec.pad_begin >= 0 && spec.pad_end >= 0 && spec.pad_begin < spec.kernel, ShapeError,
                 "ConvTranspose2d: invalid padding");
    weight_ = Param<T>({1, 1, spec.in_channels, spec.out_channels * spec.kernel * spec.kernel});
    if (spec.bias) bias_ = Param<T>({1, spec.out_channels, 1, 1});
}

template <typename T>
Shape ConvTranspose2d<T>::output_shape(const Shape& in) const {
    const int oh = (in.h - 1) * spec_.stride + spec_.kernel - spec_.pad_begin - spec_.pad_end;
    const int ow = (in.w - 1) * spec_.stride + spec_.kernel - spec_.pad_begin - spec_.pad_end;
    return {in.n, spec_.out_channels, oh, ow};
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::forward(const Tensor<T>& x, Phase phase) {
    MFFSEG_CHECK(x.c() == spec_.in_channels, ShapeError,
                 "ConvTranspose2d: expected " + std::to_string(spec_.in_channels) + " input channels, got " +
                     x.shape().str());
    const Shape out = output_shape(x.shape());
    Tensor<T> y(out);
    const int okk = spec_.out_channels * spec_.kernel * spec_.kernel;
    const int grid = x.h() * x.w();
    std::vector<T> col(static_cast<std::size_t>(okk) * grid);
    const detail::PatchGeometry g{out.c, out.h, out.w, spec_.kernel, spec_.stride, spec_.pad_begin, x.h(), x.w()};
    for (int n = 0; n < x.n(); ++n) {
        detail::gemm(true, false, okk, grid, spec_.in_channels, weight_.value.data(), x.sample(n), col.data(),
                     false);
        detail::col2im(col.data(), g, y.sample(n));
        if (spec_.bias) {
            const std::size_t plane = out.plane();
            for (int c = 0; c < out.c; ++c) {
                T* p = y.plane(n, c);
                const T b = bias_.value.data()[c];
                for (std::size_t i = 0; i < plane; ++i) p[i] += b;
            }
        }
    }
    if (phase == Phase::Train) input_ = x;
    return y;
}

template <typename T>
Tensor<T> ConvTranspose2d<T>::backward(const Tensor<T>& dy) {
    require_trained(!input_.empty(), "ConvTranspose2d");
    const Shape in = input_.shape();
    const Shape out = output_shape(in);
    MFFSEG_CHECK(dy.shape() == out, ShapeError, "ConvTranspose2d backward: gradient shape " + dy.shape().str());
    Tensor<T> dx(in);
    const int okk = spec_.out_channels * spec_.kernel * spec_.kernel;
    const int grid = in.h * in.w;
    std::vector<T> dcol(static_cast<std::size_t>(okk) * grid);
    const detail::PatchGeometry g{out.c, out.h, out.w, spec_.kernel, spec_.stride, spec_.pad_begin, in.h, in.w};
    for (int n = 0; n < in.n; ++n) {
        detail::im2col(dy.sample(n), g, dcol.data());
        detail::gemm(false, false, spec_.in_channels, grid, okk, weight_.value.data(), dcol.data(), dx.sample(n),
                     false);
        detail::gemm(false, true, spec_.in_channels, okk, grid, input_.sample(n), dcol.data(), weight_.grad.data(),
                     true);
        if (spec_.bias) {
            const std::size_t plane = out.plane();
            for (int c = 0; c < out.c; ++c) {
                const T* p = dy.plane(n, c);
                double acc = 0.0;
                for (std::size_t i = 0; i < plane; ++i) acc += p[i];
                bias_.grad.data()[c] += static_cast<T>(acc);
            }
        }
    }
    input_ = Tensor<T>();
    return dx;
}

template <typename T>
void ConvTranspose2d<T>::init(Rng& rng) {
    he_normal(weight_.value, static_cast<double>(spec_.out_channels) * spec_.kernel * spec_.kernel, rng);
    if (spec_.bias) bias_.value.fill(T{});
}

template <typename T>
void ConvTranspose2d<T>::collect(const std::string& prefix, ParamRefs<T>& refs) {
    refs.params.push_back({prefix + ".weight", &weight_});
    if (spec_.bias) refs.params.push_back({prefix + ".bias", &bias_});
}

// ----------------------------------------------------------- BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(int channels, double momentum, double eps)
    : channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_({1, channels, 1, 1}),
      beta_({1, channels, 1, 1}),
      running_mean_({1, channels, 1, 1}, T(0)),
      running_var_({1, channels, 1, 1}, T(1)) {
    MFFSEG_CHECK(channels > 0, ShapeError, "BatchNorm2d: channel count must be positive");
    gamma_.value.fill(T(1));
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Phase phase) {
    MFFSEG_CHECK(x.c() == channels_, ShapeError,
                 "BatchNorm2d: expected " + std::to_string(channels_) + " channels, got " + x.shape().str());
    Tensor<T> y(x.shape());
    const std::size_t plane = x.shape().plane();
    if (phase == Phase::Eval) {
        for (int c = 0; c < channels_; ++c) {
            const double inv = 1.0 / std::sqrt(static_cast<double>(running_var_.data()[c]) + eps_);
            const T scale = static_cast<T>(gamma_.value.data()[c] * inv);
            const T shift = static_cast<T>(beta_.value.data()[c] - running_mean_.data()[c] * gamma_.value.data()[c] * inv);
            for (int n = 0; n < x.n(); ++n) {
                const T* s = x.plane(n, c);
                T* d = y.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i) d[i] = s[i] * scale + shift;
            }
        }
        return y;
    }

    const double count = static_cast<double>(x.n()) * plane;
    x_hat_ = Tensor<T>(x.shape());
    inv_std_.assign(channels_, 0.0);
    for (int c = 0; c < channels_; ++c) {
        double sum = 0.0;
        for (int n = 0; n < x.n(); ++n) {
            const T* s = x.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) sum += s[i];
        }
        const double mean = sum / count;
        double sq = 0.0;
        for (int n = 0; n < x.n(); ++n) {
            const T* s = x.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                const double d = s[i] - mean;
                sq += d * d;
            }
        }
        const double var = sq / count;
        const double inv = 1.0 / std::sqrt(var + eps_);
        inv_std_[c] = inv;
        const double g = gamma_.value.data()[c];
        const double b = beta_.value.data()[c];
        for (int n = 0; n < x.n(); ++n) {
            const T* s = x.plane(n, c);
            T* xh = x_hat_.plane(n, c);
            T* d = y.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                const double v = (s[i] - mean) * inv;
                xh[i] = static_cast<T>(v);
                d[i] = static_cast<T>(v * g + b);
            }
        }
        const double unbiased = count > 1.0 ? var * count / (count - 1.0) : var;
        running_mean_.data()[c] = static_cast<T>((1.0 - momentum_) * running_mean_.data()[c] + momentum_ * mean);
        running_var_.data()[c] = static_cast<T>((1.0 - momentum_) * running_var_.data()[c] + momentum_ * unbiased);
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& dy) {
    require_trained(!x_hat_.empty(), "BatchNorm2d");
    MFFSEG_CHECK(dy.shape() == x_hat_.shape(), ShapeError, "BatchNorm2d backward: gradient shape " + dy.shape().str());
    Tensor<T> dx(dy.shape());
    const std::size_t plane = dy.shape().plane();
    const double count = static_cast<double>(dy.n()) * plane;
    for (int c = 0; c < channels_; ++c) {
        double sum_dy = 0.0, sum_dy_xh = 0.0;
        for (int n = 0; n < dy.n(); ++n) {
            const T* g = dy.plane(n, c);
            const T* xh = x_hat_.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += g[i];
                sum_dy_xh += static_cast<double>(g[i]) * xh[i];
            }
        }
        gamma_.grad.data()[c] += static_cast<T>(sum_dy_xh);
        beta_.grad.data()[c] += static_cast<T>(sum_dy);
        const double k = gamma_.value.data()[c] * inv_std_[c] / count;
        for (int n = 0; n < dy.n(); ++n) {
            const T* g = dy.plane(n, c);
            const T* xh = x_hat_.plane(n, c);
            T* d = dx.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i)
                d[i] = static_cast<T>(k * (count * g[i] - sum_dy - xh[i] * sum_dy_xh));
        }
    }
    x_hat_ = Tensor<T>();
    return dx;
}

template <typename T>
void BatchNorm2d<T>::collect(const std::string& prefix, ParamRefs<T>& refs) {
    refs.params.push_back({prefix + ".gamma", &gamma_});
    refs.params.push_back({prefix + ".beta", &beta_});
    refs.buffers.push_back({prefix + ".running_mean", &running_mean_});
    refs.buffers.push_back({prefix + ".running_var", &running_var_});
}

// ------------------------------------------------------------ activations

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, Phase phase) {
    Tensor<T> y(x.shape());
    const T* s = x.data();
    T* d = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = s[i] > T(0) ? s[i] : T(0);
    if (phase == Phase::Train) output_ = y;
    return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& dy) {
    require_trained(!output_.empty(), "ReLU");
    Tensor<T> dx(dy.shape());
    const T* o = output_.data();
    const T* g = dy.data();
    T* d = dx.data();
    for (std::size_t i = 0; i < dy.size(); ++i) d[i] = o[i] > T(0) ? g[i] : T(0);
    output_ = Tensor<T>();
    return dx;
}

template <typename T>
Tensor<T> LeakyReLU<T>::forward(const Tensor<T>& x, Phase phase) {
    Tensor<T> y(x.shape());
    const T* s = x.data();
    T* d = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = s[i] > T(0) ? s[i] : s[i] * slope_;
    if (phase == Phase::Train) input_ = x;
    return y;
}

template <typename T>
Tensor<T> LeakyReLU<T>::backward(const Tensor<T>& dy) {
    require_trained(!input_.empty(), "LeakyReLU");
    Tensor<T> dx(dy.shape());
    const T* s = input_.data();
    const T* g = dy.data();
    T* d = dx.data();
    for (std::size_t i = 0; i < dy.size(); ++i) d[i] = s[i] > T(0) ? g[i] : g[i] * slope_;
    input_ = Tensor<T>();
    return dx;
}

// ---------------------------------------------------------------- pooling

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, Phase phase) {
    const int oh = (x.h() + 2 * padding_ - kernel_) / stride_ + 1;
    const int ow = (x.w() + 2 * padding_ - kernel_) / stride_ + 1;
    MFFSEG_CHECK(oh > 0 && ow > 0, ShapeError, "MaxPool2d: input " + x.shape().str() + " too small");
    Tensor<T> y({x.n(), x.c(), oh, ow});
    const bool train = phase == Phase::Train;
    if (train) argmax_.assign(y.size(), -1);
    std::size_t out_idx = 0;
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const T* s = x.plane(n, c);
            T* d = y.plane(n, c);
            for (int oy = 0; oy < oh; ++oy) {
                const int y0 = std::max(oy * stride_ - padding_, 0);
                const int y1 = std::min(oy * stride_ - padding_ + kernel_, x.h());
                for (int ox = 0; ox < ow; ++ox, ++out_idx) {
                    const int x0 = std::max(ox * stride_ - padding_, 0);
                    const int x1 = std::min(ox * stride_ - padding_ + kernel_, x.w());
                    T best = -std::numeric_limits<T>::infinity();
                    int best_i = -1;
                    for (int iy = y0; iy < y1; ++iy) {
                        for (int ix = x0; ix < x1; ++ix) {
                            const int i = iy * x.w() + ix;
                            if (s[i] > best) {
                                best = s[i];
                                best_i = i;
                            }
                        }
                    }
                    d[oy * ow + ox] = best;
                    if (train) argmax_[out_idx] = best_i;
                }
            }
        }
    }
    if (train) in_shape_ = x.shape();
    return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& dy) {
    require_trained(!argmax_.empty(), "MaxPool2d");
    Tensor<T> dx(in_shape_);
    const std::size_t plane = dy.shape().plane();
    std::size_t idx = 0;
    for (int n = 0; n < dy.n(); ++n) {
        for (int c = 0; c < dy.c(); ++c) {
            const T* g = dy.plane(n, c);
            T* d = dx.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i, ++idx) {
                if (argmax_[idx] >= 0) d[argmax_[idx]] += g[i];
            }
        }
    }
    argmax_.clear();
    return dx;
}

template <typename T>
Tensor<T> AvgPool2x2<T>::forward(const Tensor<T>& x, Phase phase) {
    MFFSEG_CHECK(x.h() % 2 == 0 && x.w() % 2 == 0, ShapeError,
                 "AvgPool2x2: spatial dims of " + x.shape().str() + " must be even");
    Tensor<T> y({x.n(), x.c(), x.h() / 2, x.w() / 2});
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const T* s = x.plane(n, c);
            T* d = y.plane(n, c);
            for (int oy = 0; oy < y.h(); ++oy) {
                const T* r0 = s + static_cast<std::size_t>(2 * oy) * x.w();
                const T* r1 = r0 + x.w();
                for (int ox = 0; ox < y.w(); ++ox)
                    d[oy * y.w() + ox] = (r0[2 * ox] + r0[2 * ox + 1] + r1[2 * ox] + r1[2 * ox + 1]) * T(0.25);
            }
        }
    }
    if (phase == Phase::Train) in_shape_ = x.shape();
    return y;
}

template <typename T>
Tensor<T> AvgPool2x2<T>::backward(const Tensor<T>& dy) {
    require_trained(in_shape_.numel() > 0, "AvgPool2x2");
    Tensor<T> dx(in_shape_);
    for (int n = 0; n < dy.n(); ++n) {
        for (int c = 0; c < dy.c(); ++c) {
            const T* g = dy.plane(n, c);
            T* d = dx.plane(n, c);
            for (int oy = 0; oy < dy.h(); ++oy) {
                for (int ox = 0; ox < dy.w(); ++ox) {
                    const T v = g[oy * dy.w() + ox] * T(0.25);
                    T* r0 = d + static_cast<std::size_t>(2 * oy) * in_shape_.w + 2 * ox;
                    r0[0] += v;
                    r0[1] += v;
                    r0[in_shape_.w] += v;
                    r0[in_shape_.w + 1] += v;
                }
            }
        }
    }
    in_shape_ = {};
    return dx;
}

namespace {
// Adaptive pooling bin [start, end) for output cell i of g over length n.
inline std::pair<int, int> adaptive_bin(int i, int g, int n) {
    const int start = (i * n) / g;
    const int end = ((i + 1) * n + g - 1) / g;
    return {start, end};
}
}  // namespace

template <typename T>
Tensor<T> AdaptiveAvgPool2d<T>::forward(const Tensor<T>& x, Phase phase) {
    MFFSEG_CHECK(grid_ >= 1 && grid_ <= x.h() && grid_ <= x.w(), ShapeError,
                 "AdaptiveAvgPool2d: grid " + std::to_string(grid_) + " exceeds feature map " + x.shape().str());
    Tensor<T> y({x.n(), x.c(), grid_, grid_});
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const T* s = x.plane(n, c);
            T* d = y.plane(n, c);
            for (int gy = 0; gy < grid_; ++gy) {
                const auto [y0, y1] = adaptive_bin(gy, grid_, x.h());
                for (int gx = 0; gx < grid_; ++gx) {
                    const auto [x0, x1] = adaptive_bin(gx, grid_, x.w());
                    double acc = 0.0;
                    for (int iy = y0; iy < y1; ++iy)
                        for (int ix = x0; ix < x1; ++ix) acc += s[iy * x.w() + ix];
                    d[gy * grid_ + gx] = static_cast<T>(acc / ((y1 - y0) * (x1 - x0)));
                }
            }
        }
    }
    if (phase == Phase::Train) in_shape_ = x.shape();
    return y;
}

template <typename T>
Tensor<T> AdaptiveAvgPool2d<T>::backward(const Tensor<T>& dy) {
    require_trained(in_shape_.numel() > 0, "AdaptiveAvgPool2d");
    Tensor<T> dx(in_shape_);
    for (int n = 0; n < dy.n(); ++n) {
        for (int c = 0; c < dy.c(); ++c) {
            const T* g = dy.plane(n, c);
            T* d = dx.plane(n, c);
            for (int gy = 0; gy < grid_; ++gy) {
                const auto [y0, y1] = adaptive_bin(gy, grid_, in_shape_.h);
                for (int gx = 0; gx < grid_; ++gx) {
                    const auto [x0, x1] = adaptive_bin(gx, grid_, in_shape_.w);
                    const T v = g[gy * grid_ + gx] / static_cast<T>((y1 - y0) * (x1 - x0));
                    for (int iy = y0; iy < y1; ++iy)
                        for (int ix = x0; ix < x1; ++ix) d[iy * in_shape_.w + ix] += v;
                }
            }
        }
    }
    in_shape_ = {};
    return dx;
}

// --------------------------------------------------------------- bilinear

namespace {

struct AxisTaps {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

AxisTaps axis_taps(int in, int out) {
    AxisTaps t;
    t.lo.resize(out);
    t.hi.resize(out);
    t.frac.resize(out);
    const double scale = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * scale - 0.5;
        if (src < 0.0) src = 0.0;
        int lo = static_cast<int>(src);
        if (lo > in - 1) lo = in - 1;
        t.lo[o] = lo;
        t.hi[o] = lo + 1 < in ? lo + 1 : in - 1;
        t.frac[o] = src - lo;
    }
    return t;
}

// Output o reads source coordinate o / factor (cell r sits on pixel factor*r).
AxisTaps grid_taps(int in, int factor) {
    AxisTaps t;
    const int out = in * factor;
    t.lo.resize(out);
    t.hi.resize(out);
    t.frac.resize(out);
    for (int o = 0; o < out; ++o) {
        const int lo = o / factor;
        t.lo[o] = lo;
        t.hi[o] = lo + 1 < in ? lo + 1 : in - 1;
        t.frac[o] = lo + 1 < in ? static_cast<double>(o % factor) / factor : 0.0;
    }
    return t;
}

template <typename T>
void resample(const Tensor<T>& x, Tensor<T>& y, const AxisTaps& ty, const AxisTaps& tx) {
    const int out_h = y.h(), out_w = y.w();
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const T* s = x.plane(n, c);
            T* d = y.plane(n, c);
            for (int oy = 0; oy < out_h; ++oy) {
                const T* r0 = s + static_cast<std::size_t>(ty.lo[oy]) * x.w();
                const T* r1 = s + static_cast<std::size_t>(ty.hi[oy]) * x.w();
                const T fy = static_cast<T>(ty.frac[oy]);
                T* drow = d + static_cast<std::size_t>(oy) * out_w;
                for (int ox = 0; ox < out_w; ++ox) {
                    const T fx = static_cast<T>(tx.frac[ox]);
                    const T top = r0[tx.lo[ox]] + (r0[tx.hi[ox]] - r0[tx.lo[ox]]) * fx;
                    const T bot = r1[tx.lo[ox]] + (r1[tx.hi[ox]] - r1[tx.lo[ox]]) * fx;
                    drow[ox] = top + (bot - top) * fy;
                }
            }
        }
    }
}

}  // namespace

template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w) {
    MFFSEG_CHECK(out_h > 0 && out_w > 0 && x.h() > 0 && x.w() > 0, ShapeError, "resize_bilinear: empty extent");
    Tensor<T> y({x.n(), x.c(), out_h, out_w});
    if (out_h == x.h() && out_w == x.w()) {
        std::copy(x.data(), x.data() + x.size(), y.data());
        return y;
    }
    resample(x, y, axis_taps(x.h(), out_h), axis_taps(x.w(), out_w));
    return y;
}

template <typename T>
Tensor<T> upsample_sample_grid(const Tensor<T>& x, int factor) {
    MFFSEG_CHECK(factor >= 1 && x.h() > 0 && x.w() > 0, ShapeError, "upsample_sample_grid: bad factor or empty map");
    Tensor<T> y({x.n(), x.c(), x.h() * factor, x.w() * factor});
    resample(x, y, grid_taps(x.h(), factor), grid_taps(x.w(), factor));
    return y;
}

template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dy, int in_h, int in_w) {
    Tensor<T> dx({dy.n(), dy.c(), in_h, in_w});
    if (dy.h() == in_h && dy.w() == in_w) {
        std::copy(dy.data(), dy.data() + dy.size(), dx.data());
        return dx;
    }
    const AxisTaps ty = axis_taps(in_h, dy.h());
    const AxisTaps tx = axis_taps(in_w, dy.w());
    for (int n = 0; n < dy.n(); ++n) {
        for (int c = 0; c < dy.c(); ++c) {
            const T* g = dy.plane(n, c);
            T* d = dx.plane(n, c);
            for (int oy = 0; oy < dy.h(); ++oy) {
                T* r0 = d + static_cast<std::size_t>(ty.lo[oy]) * in_w;
                T* r1 = d + static_cast<std::size_t>(ty.hi[oy]) * in_w;
                const T fy = static_cast<T>(ty.frac[oy]);
                const T* grow = g + static_cast<std::size_t>(oy) * dy.w();
                for (int ox = 0; ox < dy.w(); ++ox) {
                    const T fx = static_cast<T>(tx.frac[ox]);
                    const T v = grow[ox];
                    r0[tx.lo[ox]] += v * (T(1) - fy) * (T(1) - fx);
                    r0[tx.hi[ox]] += v * (T(1) - fy) * fx;
                    r1[tx.lo[ox]] += v * fy * (T(1) - fx);
                    r1[tx.hi[ox]] += v * fy * fx;
                }
            }
        }
    }
    return dx;
}

template <typename T>
Tensor<T> Resize<T>::forward(const Tensor<T>& x, int out_h, int out_w, Phase phase) {
    if (phase == Phase::Train) {
        in_h_ = x.h();
        in_w_ = x.w();
    }
    return resize_bilinear(x, out_h, out_w);
}

template <typename T>
Tensor<T> Resize<T>::backward(const Tensor<T>& dy) {
    require_trained(in_h_ > 0, "Resize");
    auto dx = resize_bilinear_backward(dy, in_h_, in_w_);
    in_h_ = in_w_ = 0;
    return dx;
}

// ---------------------------------------------------------- softmax et al

template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits) {
    Tensor<T> p(logits.shape());
    const std::size_t plane = logits.shape().plane();
    const int k = logits.c();
    for (int n = 0; n < logits.n(); ++n) {
        const T* z = logits.sample(n);
        T* o = p.sample(n);
        for (std::size_t i = 0; i < plane; ++i) {
            T mx = z[i];
            for (int c = 1; c < k; ++c) mx = std::max(mx, z[c * plane + i]);
            double sum = 0.0;
            for (int c = 0; c < k; ++c) {
                const double e = std::exp(static_cast<double>(z[c * plane + i] - mx));
                o[c * plane + i] = static_cast<T>(e);
                sum += e;
            }
            const double inv = 1.0 / sum;
            for (int c = 0; c < k; ++c) o[c * plane + i] = static_cast<T>(o[c * plane + i] * inv);
        }
    }
    return p;
}

template <typename T>
Tensor<T> softmax_channels_backward(const Tensor<T>& probs, const Tensor<T>& dprobs) {
    MFFSEG_CHECK(probs.shape() == dprobs.shape(), ShapeError, "softmax backward: shape mismatch");
    Tensor<T> dz(probs.shape());
    const std::size_t plane = probs.shape().plane();
    const int k = probs.c();
    for (int n = 0; n < probs.n(); ++n) {
        const T* p = probs.sample(n);
        const T* g = dprobs.sample(n);
        T* d = dz.sample(n);
        for (std::size_t i = 0; i < plane; ++i) {
            double dot = 0.0;
            for (int c = 0; c < k; ++c) dot += static_cast<double>(p[c * plane + i]) * g[c * plane + i];
            for (int c = 0; c < k; ++c)
                d[c * plane + i] = static_cast<T>(p[c * plane + i] * (g[c * plane + i] - dot));
        }
    }
    return dz;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> y(x.shape());
    const T* s = x.data();
    T* d = y.data();
    for (std::size_t i = 0; i < x.size(); ++i) d[i] = static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(s[i]))));
    return y;
}

#define MFFSEG_INSTANTIATE_LAYERS(T)                                                    \
    template class Conv2d<T>;                                                           \
    template class ConvTranspose2d<T>;                                                  \
    template class BatchNorm2d<T>;                                                      \
    template class ReLU<T>;                                                             \
    template class LeakyReLU<T>;                                                        \
    template class MaxPool2d<T>;                                                        \
    template class AvgPool2x2<T>;                                                       \
    template class AdaptiveAvgPool2d<T>;                                                \
    template class Resize<T>;                                                           \
    template Tensor<T> resize_bilinear<T>(const Tensor<T>&, int, int);                  \
    template Tensor<T> resize_bilinear_backward<T>(const Tensor<T>&, int, int);         \
    template Tensor<T> upsample_sample_grid<T>(const Tensor<T>&, int);                 \
    template Tensor<T> softmax_channels<T>(const Tensor<T>&);                           \
    template Tensor<T> softmax_channels_backward<T>(const Tensor<T>&, const Tensor<T>&); \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);

MFFSEG_INSTANTIATE_LAYERS(float)
MFFSEG_INSTANTIATE_LAYERS(double)

}  // namespace mffseg::nn
