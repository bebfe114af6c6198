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

#include <memory>
#include <string>
#include <vector>

#include "mffseg/layers.hpp"

namespace mffseg::nn {

// Conv-Block: convolution -> batch-norm -> ReLU.
template <typename T>
class ConvBnRelu {
public:
    ConvBnRelu() = default;
    explicit ConvBnRelu(ConvSpec spec) : conv_(spec), bn_(spec.out_channels) {}

    Tensor<T> forward(const Tensor<T>& x, Phase phase) {
        return relu_.forward(bn_.forward(conv_.forward(x, phase), phase), phase);
    }
    Tensor<T> backward(const Tensor<T>& dy) { return conv_.backward(bn_.backward(relu_.backward(dy))); }
    void init(Rng& rng) { conv_.init(rng); }
    void collect(const std::string& prefix, ParamRefs<T>& refs) {
        conv_.collect(prefix + ".conv", refs);
        bn_.collect(prefix + ".bn", refs);
    }
    int out_channels() const { return conv_.spec().out_channels; }

private:
    Conv2d<T> conv_;
    BatchNorm2d<T> bn_;
    ReLU<T> relu_;
};

template <typename T>
class DeconvBnRelu {
public:
    DeconvBnRelu() = default;
    explicit DeconvBnRelu(DeconvSpec spec) : deconv_(spec), bn_(spec.out_channels) {}

    Tensor<T> forward(const Tensor<T>& x, Phase phase) {
        return relu_.forward(bn_.forward(deconv_.forward(x, phase), phase), phase);
    }
    Tensor<T> backward(const Tensor<T>& dy) { return deconv_.backward(bn_.backward(relu_.backward(dy))); }
    void init(Rng& rng) { deconv_.init(rng); }
    void collect(const std::string& prefix, ParamRefs<T>& refs) {
        deconv_.collect(prefix + ".deconv", refs);
        bn_.collect(prefix + ".bn", refs);
    }

private:
    ConvTranspose2d<T> deconv_;
    BatchNorm2d<T> bn_;
    ReLU<T> relu_;
};

// ResNet basic unit: two 3x3 convolutions with an identity or 1x1 projection
// shortcut.
template <typename T>
class ResidualUnit {
public:
    ResidualUnit() = default;
    ResidualUnit(int in_channels, int out_channels, int stride);

    Tensor<T> forward(const Tensor<T>& x, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);
    void init(Rng& rng);
    void collect(const std::string& prefix, ParamRefs<T>& refs);

private:
    Conv2d<T> conv1_, conv2_;
    BatchNorm2d<T> bn1_, bn2_;
    ReLU<T> relu1_, relu_out_;
    bool project_ = false;
    Conv2d<T> proj_conv_;
    BatchNorm2d<T> proj_bn_;
};

// Two residual units; the first carries the stride and channel change.
template <typename T>
class ResidualStage {
public:
    ResidualStage() = default;
    ResidualStage(int in_channels, int out_channels, int stride)
        : first_(in_channels, out_channels, stride), second_(out_channels, out_channels, 1),
          out_channels_(out_channels) {}

    Tensor<T> forward(const Tensor<T>& x, Phase phase) { return second_.forward(first_.forward(x, phase), phase); }
    Tensor<T> backward(const Tensor<T>& dy) { return first_.backward(second_.backward(dy)); }
    void init(Rng& rng) {
        first_.init(rng);
        second_.init(rng);
    }
    void collect(const std::string& prefix, ParamRefs<T>& refs) {
        first_.collect(prefix + ".unit0", refs);
        second_.collect(prefix + ".unit1", refs);
    }
    int out_channels() const { return out_channels_; }

private:
    ResidualUnit<T> first_, second_;
    int out_channels_ = 0;
};

// Pyramid pooling with summation: out = f + sum_g upsample(conv1x1(avgpool_g(f))).
// The channel count is preserved for any grid list.
template <typename T>
class SppSum {
public:
    SppSum() = default;
    SppSum(int channels, std::vector<int> grids);

    Tensor<T> forward(const Tensor<T>& f, Phase phase);
    Tensor<T> backward(const Tensor<T>& dy);
    void init(Rng& rng);
    void collect(const std::string& prefix, ParamRefs<T>& refs);

    const std::vector<int>& grids() const { return grids_; }
    Conv2d<T>& projection(std::size_t branch) { return branches_[branch].conv; }

private:
    struct Branch {
        AdaptiveAvgPool2d<T> pool;
        Conv2d<T> conv;
        Resize<T> resize;
    };
    int channels_ = 0;
    std::vector<int> grids_;
    std::vector<Branch> branches_;
};

template <typename T>
struct MffOutput {
    Tensor<T> fused;
    Tensor<T> aux_logits;
};

template <typename T>
struct MffGrads {
    Tensor<T> d_aux;
    Tensor<T> d_main;
};

// Multi-resolution feature fusion. The scale-16 auxiliary map is classified
// by a 1x1 head (auxiliary class maps), and separately reduced by a stride-2
// 3x3 convolution followed by a 1x1 bottleneck to the main channel count,
// batch-normalized, added to the batch-normalized scale-32 main map, and
// rectified.
template <typename T>
class MffFusion {
public:
    MffFusion() = default;
    MffFusion(int aux_channels, int main_channels, int bottleneck_channels, int num_classes);

    MffOutput<T> forward(const Tensor<T>& f_aux, const Tensor<T>& f_main, Phase phase);
    MffGrads<T> backward(const Tensor<T>& d_fused, const Tensor<T>& d_aux_logits);
    // Auxiliary class maps alone (the early-exit path).
    Tensor<T> aux_logits(const Tensor<T>& f_aux) { return aux_head_.forward(f_aux, Phase::Eval); }

    void init(Rng& rng);
    void collect(const std::string& prefix, ParamRefs<T>& refs);

    Conv2d<T>& bottleneck() { return bottleneck_; }
    Conv2d<T>& downsample() { return down_; }

private:
    Conv2d<T> aux_head_;
    Conv2d<T> down_;
    Conv2d<T> bottleneck_;
    BatchNorm2d<T> bn_aux_, bn_main_;
    ReLU<T> relu_;
};

// Conv(1x1, in/4) -> Deconv(3x3, stride 2) -> Conv(1x1, out), each with BN + ReLU.
template <typename T>
class Decoder {
public:
    Decoder() = default;
    Decoder(int in_channels, int out_channels);

    Tensor<T> forward(const Tensor<T>& x, Phase phase) {
        return expand_.forward(up_.forward(reduce_.forward(x, phase), phase), phase);
    }
    Tensor<T> backward(const Tensor<T>& dy) { return reduce_.backward(up_.backward(expand_.backward(dy))); }
    void init(Rng& rng) {
        reduce_.init(rng);
        up_.init(rng);
        expand_.init(rng);
    }
    void collect(const std::string& prefix, ParamRefs<T>& refs) {
        reduce_.collect(prefix + ".reduce", refs);
        up_.collect(prefix + ".up", refs);
        expand_.collect(prefix + ".expand", refs);
    }
    int out_channels() const { return expand_.out_channels(); }

private:
    ConvBnRelu<T> reduce_;
    DeconvBnRelu<T> up_;
    ConvBnRelu<T> expand_;
};

// Deconv(3x3, stride 2) -> Conv(3x3) -> Deconv(2x2, stride 1) producing logits.
template <typename T>
class ClassBlock {
public:
    ClassBlock() = default;
    ClassBlock(int in_channels, int mid_channels, int num_classes);

    Tensor<T> forward(const Tensor<T>& x, Phase phase) {
        return head_.forward(conv_.forward(up_.forward(x, phase), phase), phase);
    }
    Tensor<T> backward(const Tensor<T>& dy) { return up_.backward(conv_.backward(head_.backward(dy))); }
    void init(Rng& rng) {
        up_.init(rng);
        conv_.init(rng);
        head_.init(rng);
    }
    void collect(const std::string& prefix, ParamRefs<T>& refs) {
        up_.collect(prefix + ".up", refs);
        conv_.collect(prefix + ".conv", refs);
        head_.collect(prefix + ".head", refs);
    }

private:
    DeconvBnRelu<T> up_;
    ConvBnRelu<T> conv_;
    ConvTranspose2d<T> head_;
};

}  // namespace mffseg::nn
