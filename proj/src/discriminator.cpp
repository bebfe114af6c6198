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

#include "mffseg/discriminator.hpp"

#include <string>

namespace mffseg::adv {

template <typename T>
Discriminator<T>::Discriminator(int num_classes, std::uint64_t seed) : num_classes_(num_classes) {
    MFFSEG_CHECK(num_classes >= 2, ConfigError,
                 "discriminator: num_classes must be >= 2, got " + std::to_string(num_classes));
    int in = num_classes;
    for (int i = 0; i < 5; ++i) {
        const int out = i < 4 ? kWidths[i] : 1;
        convs_[i] = nn::Conv2d<T>({in, out, 4, 2, 1, true});
        in = out;
    }
    acts_.fill(nn::LeakyReLU<T>(T(0.2)));
    Rng rng(seed);
    for (int i = 0; i < 5; ++i) {
        convs_[i].init(rng);
        convs_[i].collect("conv" + std::to_string(i + 1), refs_);
    }
}

template <typename T>
Tensor<T> Discriminator<T>::forward_logits(const Tensor<T>& probs, Phase phase) {
    MFFSEG_CHECK(probs.c() == num_classes_, ShapeError,
                 "discriminator: expected " + std::to_string(num_classes_) + " channels, got " + probs.shape().str());
    MFFSEG_CHECK(probs.h() >= 32 && probs.w() >= 32, ShapeError,
                 "discriminator: input " + probs.shape().str() + " must be at least 32x32");
    Tensor<T> h = probs;
    for (int i = 0; i < 5; ++i) {
        h = convs_[i].forward(h, phase);
        if (i < 4) h = acts_[i].forward(h, phase);
    }
    return upsample_.forward(h, probs.h(), probs.w(), phase);
}

template <typename T>
Tensor<T> Discriminator<T>::forward(const Tensor<T>& probs, Phase phase) {
    return nn::sigmoid(forward_logits(probs, phase));
}

template <typename T>
Tensor<T> Discriminator<T>::backward_logits(const Tensor<T>& d_logits) {
    Tensor<T> d = upsample_.backward(d_logits);
    for (int i = 4; i >= 0; --i) {
        if (i < 4) d = acts_[i].backward(d);
        d = convs_[i].backward(d);
    }
    return d;
}

template <typename T>
Tensor<T> one_hot(std::span<const LabelMap> labels, int num_classes) {
    MFFSEG_CHECK(!labels.empty(), ShapeError, "one_hot: empty batch");
    const int height = labels[0].height, width = labels[0].width;
    Tensor<T> out({static_cast<int>(labels.size()), num_classes, height, width});
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        MFFSEG_CHECK(labels[n].height == height && labels[n].width == width, ShapeError,
                     "one_hot: label maps in a batch must share one extent");
        T* dst = out.sample(static_cast<int>(n));
        for (std::size_t i = 0; i < plane; ++i) {
            const int k = labels[n].indices[i];
            MFFSEG_CHECK(k < num_classes, DataError,
                         "one_hot: label value " + std::to_string(k) + " out of range for " +
                             std::to_string(num_classes) + " classes");
            dst[static_cast<std::size_t>(k) * plane + i] = T(1);
        }
    }
    return out;
}

template class Discriminator<float>;
template class Discriminator<double>;
template Tensor<float> one_hot<float>(std::span<const LabelMap>, int);
template Tensor<double> one_hot<double>(std::span<const LabelMap>, int);

}  // namespace mffseg::adv
