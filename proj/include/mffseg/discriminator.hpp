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

#include <array>
#include <cstdint>
#include <vector>

#include "mffseg/layers.hpp"
#include "mffseg/types.hpp"

namespace mffseg::adv {

using nn::Phase;
using nn::Tensor;

// Fully convolutional real/fake scorer over class-probability maps: five
// 4x4 stride-2 convolutions (64, 128, 256, 512, 1 channels) with leaky-ReLU
// (slope 0.2) between them, bilinear upsampling back to the input extent,
// and a sigmoid. No batch-norm.
template <typename T>
class Discriminator {
public:
    static constexpr std::array<int, 4> kWidths{64, 128, 256, 512};

    explicit Discriminator(int num_classes, std::uint64_t seed = 0);

    Discriminator(const Discriminator&) = delete;
    Discriminator& operator=(const Discriminator&) = delete;

    // Pre-sigmoid scores at the input resolution (N x 1 x H x W).
    Tensor<T> forward_logits(const Tensor<T>& probs, Phase phase);
    // Confidence map: sigmoid(forward_logits).
    Tensor<T> forward(const Tensor<T>& probs, Phase phase);
    // dL/dlogits -> dL/dprobs; parameter gradients accumulate.
    Tensor<T> backward_logits(const Tensor<T>& d_logits);

    nn::ParamRefs<T>& refs() { return refs_; }
    int num_classes() const { return num_classes_; }
    std::size_t parameter_count() const { return refs_.learnable_count(); }

private:
    int num_classes_;
    std::array<nn::Conv2d<T>, 5> convs_;
    std::array<nn::LeakyReLU<T>, 4> acts_;
    nn::Resize<T> upsample_;
    nn::ParamRefs<T> refs_;
};

// Channel-wise one-hot encoding of a batch of equally sized label maps.
template <typename T>
Tensor<T> one_hot(std::span<const LabelMap> labels, int num_classes);

}  // namespace mffseg::adv
