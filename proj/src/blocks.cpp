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

#include "mffseg/blocks.hpp"

namespace mffseg::nn {

template <typename T>
ResidualUnit<T>::ResidualUnit(int in_channels, int out_channels, int stride)
    : conv1_({in_channels, out_channels, 3, stride, 1, false}),
      conv2_({out_channels, out_channels, 3, 1, 1, false}),
      bn1_(out_channels),
      bn2_(out_channels),
      project_(stride != 1 || in_channels != out_channels) {
    if (project_) {
        proj_conv_ = Conv2d<T>({in_channels, out_channels, 1, stride, 0, false});
        proj_bn_ = BatchNorm2d<T>(out_channels);
    }
}

template <typename T>
Tensor<T> ResidualUnit<T>::forward(const Tensor<T>& x, Phase phase) {
    Tensor<T> y = relu1_.forward(bn1_.forward(conv1_.forward(x, phase), phase), phase);
    y = bn2_.forward(conv2_.forward(y, phase), phase);
    if (project_)
        y += proj_bn_.forward(proj_conv_.forward(x, phase), phase);
    else
        y += x;
    return relu_out_.forward(y, phase);
}

template <typename T>
Tensor<T> ResidualUnit<T>::backward(const Tensor<T>& dy) {
    const Tensor<T> d = relu_out_.backward(dy);
    Tensor<T> dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d)))));
    if (project_)
        dx += proj_conv_.backward(proj_bn_.backward(d));
    else
        dx += d;
    return dx;
}

template <typename T>
void ResidualUnit<T>::init(Rng& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    if (project_) proj_conv_.init(rng);
}

template <typename T>
void ResidualUnit<T>::collect(const std::string& prefix, ParamRefs<T>& refs) {
    conv1_.collect(prefix + ".conv1", refs);
    bn1_.collect(prefix + ".bn1", refs);
    conv2_.collect(prefix + ".conv2", refs);
    bn2_.collect(prefix + ".bn2", refs);
    if (project_) {
        proj_conv_.collect(prefix + ".proj.conv", refs);
        proj_bn_.collect(prefix + ".proj.bn", refs);
    }
}

template <typename T>
SppSum<T>::SppSum(int channels, std::vector<int> grids) : channels_(channels), grids_(std::move(grids)) {
    for (int g : grids_) {
        MFFSEG_CHECK(g >= 1, ShapeError, "SppSum: grid size must be >= 1, got " + std::to_string(g));
        branches_.push_back({AdaptiveAvgPool2d<T>(g), Conv2d<T>({channels, channels, 1, 1, 0, true}), Resize<T>()});
    }
}

template <typename T>
Tensor<T> SppSum<T>::forward(const Tensor<T>& f, Phase phase) {
    for (int g : grids_) {
        MFFSEG_CHECK(g <= f.h() && g <= f.w(), ShapeError,
                     "SppSum: grid " + std::to_string(g) + " larger than feature map " + f.shape().str());
    }
    Tensor<T> out = f;
    for (auto& b : branches_) {
        Tensor<T> p = b.conv.forward(b.pool.forward(f, phase), phase);
        out += b.resize.forward(p, f.h(), f.w(), phase);
    }
    return out;
}

template <typename T>
Tensor<T> SppSum<T>::backward(const Tensor<T>& dy) {
    Tensor<T> df = dy;
    for (auto& b : branches_) df += b.pool.backward(b.conv.backward(b.resize.backward(dy)));
    return df;
}

template <typename T>
void SppSum<T>::init(Rng& rng) {
    for (auto& b : branches_) b.conv.init(rng);
}

template <typename T>
void SppSum<T>::collect(const std::string& prefix, ParamRefs<T>& refs) {
    for (std::size_t i = 0; i < branches_.size(); ++i)
        branches_[i].conv.collect(prefix + ".grid" + std::to_string(grids_[i]), refs);
}

template <typename T>
MffFusion<T>::MffFusion(int aux_channels, int main_channels, int bottleneck_channels, int num_classes)
    : aux_head_({aux_channels, num_classes, 1, 1, 0, true}),
      down_({aux_channels, aux_channels, 3, 2, 1, false}),
      bottleneck_({aux_channels, bottleneck_channels, 1, 1, 0, false}),
      bn_aux_(bottleneck_channels),
      bn_main_(main_channels) {
    MFFSEG_CHECK(bottleneck_channels == main_channels, ShapeError,
                 "MffFusion: bottleneck width " + std::to_string(bottleneck_channels) +
                     " must equal main-branch channels " + std::to_string(main_channels));
}

template <typename T>
MffOutput<T> MffFusion<T>::forward(const Tensor<T>& f_aux, const Tensor<T>& f_main, Phase phase) {
    MFFSEG_CHECK(f_aux.n() == f_main.n() && f_aux.h() == 2 * f_main.h() && f_aux.w() == 2 * f_main.w(), ShapeError,
                 "MffFusion: auxiliary map " + f_aux.shape().str() + " must be exactly twice the main map " +
                     f_main.shape().str() + " spatially");
    MffOutput<T> out;
    out.aux_logits = aux_head_.forward(f_aux, phase);
    Tensor<T> a = bn_aux_.forward(bottleneck_.forward(down_.forward(f_aux, phase), phase), phase);
    a += bn_main_.forward(f_main, phase);
    out.fused = relu_.forward(a, phase);
    return out;
}

template <typename T>
MffGrads<T> MffFusion<T>::backward(const Tensor<T>& d_fused, const Tensor<T>& d_aux_logits) {
    const Tensor<T> ds = relu_.backward(d_fused);
    MffGrads<T> g;
    g.d_main = bn_main_.backward(ds);
    g.d_aux = down_.backward(bottleneck_.backward(bn_aux_.backward(ds)));
    g.d_aux += aux_head_.backward(d_aux_logits);
    return g;
}

template <typename T>
void MffFusion<T>::init(Rng& rng) {
    aux_head_.init(rng);
    down_.init(rng);
    bottleneck_.init(rng);
}

template <typename T>
void MffFusion<T>::collect(const std::string& prefix, ParamRefs<T>& refs) {
    aux_head_.collect(prefix + ".aux_head", refs);
    down_.collect(prefix + ".down", refs);
    bottleneck_.collect(prefix + ".bottleneck", refs);
    bn_aux_.collect(prefix + ".bn_aux", refs);
    bn_main_.collect(prefix + ".bn_main", refs);
}

template <typename T>
Decoder<T>::Decoder(int in_channels, int out_channels) {
    const int mid = std::max(1, in_channels / 4);
    reduce_ = ConvBnRelu<T>({in_channels, mid, 1, 1, 0, false});
    up_ = DeconvBnRelu<T>({mid, mid, 3, 2, 1, 0, false});
    expand_ = ConvBnRelu<T>({mid, out_channels, 1, 1, 0, false});
}

template <typename T>
ClassBlock<T>::ClassBlock(int in_channels, int mid_channels, int num_classes)
    : up_({in_channels, mid_channels, 3, 2, 1, 0, false}),
      conv_({mid_channels, mid_channels, 3, 1, 1, false}),
      head_({mid_channels, num_classes, 2, 1, 0, 1, true}) {}

#define MFFSEG_INSTANTIATE_BLOCKS(T) \
    template class ResidualUnit<T>;  \
    template class SppSum<T>;        \
    template class MffFusion<T>;     \
    template class Decoder<T>;       \
    template class ClassBlock<T>;

MFFSEG_INSTANTIATE_BLOCKS(float)
MFFSEG_INSTANTIATE_BLOCKS(double)

}  // namespace mffseg::nn
