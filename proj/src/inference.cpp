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

#include "mffseg/inference.hpp"

#include <algorithm>

namespace mffseg::infer {

Branch parse_branch(std::string_view name) {
    if (name == "main") return Branch::Main;
    if (name == "auxiliary") return Branch::Auxiliary;
    throw ConfigError("unknown branch '" + std::string(name) + "' (expected main or auxiliary)");
}

std::string branch_name(Branch branch) { return branch == Branch::Main ? "main" : "auxiliary"; }

nn::Tensor<float> make_input(std::span<const NormalizedFrame> frames) {
    MFFSEG_CHECK(!frames.empty(), ShapeError, "make_input: empty batch");
    const int h = frames[0].height, w = frames[0].width;
    nn::Tensor<float> x(nn::Shape{static_cast<int>(frames.size()), 3, h, w});
    for (std::size_t i = 0; i < frames.size(); ++i) {
        MFFSEG_CHECK(frames[i].height == h && frames[i].width == w, ShapeError,
                     "make_input: frames differ in extent within a batch");
        std::copy(frames[i].planes.begin(), frames[i].planes.end(), x.sample(static_cast<int>(i)));
    }
    return x;
}

nn::Tensor<float> class_scores(nn::Segmentor<float>& segmentor, const nn::Tensor<float>& input, Branch branch) {
    if (branch == Branch::Main) return segmentor.predict(input);
    const auto logits = segmentor.predict_auxiliary_logits(input);
    return nn::upsample_sample_grid(logits, input.h() / logits.h());
}

std::vector<LabelMap> argmax_labels(const nn::Tensor<float>& scores) {
    const auto& s = scores.shape();
    std::vector<LabelMap> out;
    for (int n = 0; n < s.n; ++n) {
        LabelMap m(s.h, s.w);
        std::vector<float> best(scores.plane(n, 0), scores.plane(n, 0) + s.plane());
        for (int k = 1; k < s.c; ++k) {
            const float* p = scores.plane(n, k);
            for (std::size_t i = 0; i < s.plane(); ++i) {
                if (p[i] > best[i]) {
                    best[i] = p[i];
                    m.indices[i] = static_cast<std::uint8_t>(k);
                }
            }
        }
        out.push_back(std::move(m));
    }
    return out;
}

}  // namespace mffseg::infer
