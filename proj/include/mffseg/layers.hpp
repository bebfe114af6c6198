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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mffseg/rng.hpp"
#include "mffseg/tensor.hpp"

namespace mffseg::nn {

// Train: batch statistics in batch-norm and activations retained for backward.
// Eval: running statistics, nothing retained.
enum class Phase { Train, Eval };

template <typename T>
struct Param {
    Tensor<T> value;
    Tensor<T> grad;

    Param() = default;
    explicit Param(Shape shape) : value(shape), grad(shape) {}
    void zero_grad() { grad.fill(T{}); }
};

template <typename T>
struct NamedParam {
    std::string name;
    Param<T>* param;
};

template <typename T>
struct NamedBuffer {
    std::string name;
    Tensor<T>* buffer;
};

// Flat view over a module tree's learnable arrays and persistent buffers.
template <typename T>
struct ParamRefs {
    std::vector<NamedParam<T>> params;
    std::vector<NamedBuffer<T>> buffers;

    void zero_grad() {
        for (auto& p : params) p.param->zero_grad();
    }
    std::size_t learnable_count() const {
        std::size_t total = 0;
        for (const auto& p : params) total += p.param->value.size();
        return total;
    }
};

struct ConvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    bool bias = false;
};

template <typename T>
class Conv2d {
public:
    Conv2d() = default;
    explicit Conv2d(ConvSpec spec);

    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);

    // He-normal, fan-out mode; bias zero.
    void init(Rng& rng);
    void collect(const std::string& prefix, ParamRefs<T>& refs);

    const ConvSpec& spec() const { return spec_; }
    Param<T>& weight() { return weight_; }
    Param<T>& bias() { return bias_; }
    Shape output_shape(const Shape& in) const;

private:
    ConvSpec spec_{};
    Param<T> weight_;  // [out, in*k*k]
    Param<T> bias_;    // [out] when enabled
    Tensor<T> input_;
};

struct DeconvSpec {
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 2;
    // Output extent is (in - 1) * stride + kernel - pad_begin - pad_end.
    int pad_begin = 1;
    int pad_end = 0;
    bool bias = false;
};

// Transposed convolution (the adjoint of Conv2d with the same geometry).
template <typename T>
class ConvTranspose2d {
public:
    ConvTranspose2d() = default;
    explicit ConvTranspose2d(DeconvSpec spec);

    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);
    void init(Rng& rng);
    void collect(const std::string& prefix, ParamRefs<T>& refs);

    const DeconvSpec& spec() const { return spec_; }
    Shape output_shape(const Shape& in) const;

private:
    DeconvSpec spec_{};
    Param<T> weight_;  // [in, out*k*k]
    Param<T> bias_;
    Tensor<T> input_;
};

template <typename T>
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);

    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);
    void collect(const std::string& prefix, ParamRefs<T>& refs);

    Param<T>& gamma() { return gamma_; }
    Param<T>& beta() { return beta_; }
    Tensor<T>& running_mean() { return running_mean_; }
    Tensor<T>& running_var() { return running_var_; }
    int channels() const { return channels_; }

private:
    int channels_ = 0;
    double momentum_ = 0.1;
    double eps_ = 1e-5;
    Param<T> gamma_, beta_;
    Tensor<T> running_mean_, running_var_;
    Tensor<T> x_hat_;
    std::vector<double> inv_std_;
};

template <typename T>
class ReLU {
public:
    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);

private:
    Tensor<T> output_;
};

template <typename T>
class LeakyReLU {
public:
    explicit LeakyReLU(T slope = T(0.2)) : slope_(slope) {}
    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);

private:
    T slope_;
    Tensor<T> input_;
};

// 3x3, stride 2, padding 1 (the ResNet stem pool).
template <typename T>
class MaxPool2d {
public:
    MaxPool2d(int kernel = 3, int stride = 2, int padding = 1)
        : kernel_(kernel), stride_(stride), padding_(padding) {}
    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);

private:
    int kernel_, stride_, padding_;
    Shape in_shape_{};
    std::vector<std::int32_t> argmax_;
};

// 2x2 mean pooling; produces the half-resolution input of the auxiliary branch.
template <typename T>
class AvgPool2x2 {
public:
    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);

private:
    Shape in_shape_{};
};

template <typename T>
class AdaptiveAvgPool2d {
public:
    explicit AdaptiveAvgPool2d(int grid = 1) : grid_(grid) {}
    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);

private:
    int grid_;
    Shape in_shape_{};
};

// Bilinear resampling with half-pixel centers (align_corners = false).
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& x, int out_h, int out_w);
template <typename T>
Tensor<T> resize_bilinear_backward(const Tensor<T>& dy, int in_h, int in_w);

// Bilinear upsampling by an integer factor for class maps whose cell (r, c)
// was trained against the label at pixel (factor * r, factor * c): output
// pixel y reads source coordinate y / factor, clamped at the last cell.
template <typename T>
Tensor<T> upsample_sample_grid(const Tensor<T>& x, int factor);

template <typename T>
class Resize {
public:
    Tensor<T> forward(const Tensor<T>& x, int out_h, int out_w, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);

private:
    int in_h_ = 0, in_w_ = 0;
};

// Softmax over the channel axis at every pixel.
template <typename T>
Tensor<T> softmax_channels(const Tensor<T>& logits);
// Given p = softmax(z) and dL/dp, returns dL/dz.
template <typename T>
Tensor<T> softmax_channels_backward(const Tensor<T>& probs, const Tensor<T>& dprobs);

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x);

}  // namespace mffseg::nn
