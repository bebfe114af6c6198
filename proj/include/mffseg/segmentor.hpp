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
#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "mffseg/blocks.hpp"

namespace mffseg::nn {

struct NetworkConfig {
    int num_classes = 2;
    // Stem followed by the four residual stages (ResNet18 widths).
    std::vector<int> main_stage_channels{64, 64, 128, 256, 512};
    // Stem followed by two residual stages; exits at 1/16 of the input.
    std::vector<int> aux_stage_channels{64, 64, 128};
    std::vector<int> spp_grids{1, 2, 3, 6};
    int mff_bottleneck_channels = 512;
    // Decoder outputs at scales 16, 8, 4; each is added to the main-branch
    // stage output of the same scale.
    std::vector<int> decoder_out_channels{256, 128, 64};
    int class_block_channels = 32;

    void validate() const;
    bool operator==(const NetworkConfig&) const = default;

    // Tiny instantiation (<= 8 channels everywhere) for gradient checks and
    // fast tests; works down to 32x32 inputs.
    static NetworkConfig miniature(int num_classes);
};

// Train-mode result: logits at 1/2 and 1/16 of the input resolution.
template <typename T>
struct SegmentorOutput {
    Tensor<T> main_logits;
    Tensor<T> aux_logits;
};

struct ParameterEntry {
    std::string name;
    Shape shape;
    std::size_t count = 0;
};

struct ParameterSet {
    std::vector<ParameterEntry> entries;
    std::size_t total_count = 0;
    // Size of the serialized weight container (parameters plus batch-norm
    // running statistics).
    std::size_t serialized_bytes = 0;
};

template <typename T>
class Segmentor {
public:
    explicit Segmentor(NetworkConfig config, std::uint64_t seed = 0);

    Segmentor(const Segmentor&) = delete;
    Segmentor& operator=(const Segmentor&) = delete;

    // Input N x 3 x H x W with H, W divisible by 32.
    SegmentorOutput<T> forward(const Tensor<T>& x, Phase phase);
    // Gradients w.r.t. both heads; returns dL/dx. Requires a Train forward.
    Tensor<T> backward(const Tensor<T>& d_main_logits, const Tensor<T>& d_aux_logits);

    // Test mode: main logits upsampled x2 (bilinear, on the label sampling
    // grid) and softmax-normalized.
    Tensor<T> predict(const Tensor<T>& x);
    // Early exit through the auxiliary branch only: K x H/16 x W/16 logits.
    Tensor<T> predict_auxiliary_logits(const Tensor<T>& x);

    ParamRefs<T>& refs() { return refs_; }
    const NetworkConfig& config() const { return config_; }
    std::size_t parameter_count() const { return refs_.learnable_count(); }

    static void check_input(const Shape& s);

    // Set while a trainer drives this model; benchmarking refuses to run then.
    bool owned_by_trainer() const { return owned_by_trainer_; }
    void set_owned_by_trainer(bool owned) { owned_by_trainer_ = owned; }

    // Exposed for unit tests of the fusion stage.
    MffFusion<T>& mff() { return mff_; }
    SppSum<T>& spp() { return spp_; }

private:
    Tensor<T> aux_features(const Tensor<T>& x, Phase phase);

    NetworkConfig config_;
    ConvBnRelu<T> main_stem_;
    MaxPool2d<T> main_pool_;
    std::array<ResidualStage<T>, 4> main_stages_;
    SppSum<T> spp_;

    AvgPool2x2<T> aux_input_pool_;
    ConvBnRelu<T> aux_stem_;
    MaxPool2d<T> aux_pool_;
    std::array<ResidualStage<T>, 2> aux_stages_;

    MffFusion<T> mff_;
    std::array<Decoder<T>, 3> decoders_;
    ClassBlock<T> class_block_;

    ParamRefs<T> refs_;
    std::atomic<bool> owned_by_trainer_{false};
};

template <typename T>
ParameterSet count_parameters(Segmentor<T>& segmentor);

}  // namespace mffseg::nn
