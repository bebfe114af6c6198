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

// Finite-difference checks of the three training objectives through the
// miniature segmentor, in double precision.

#include <string>
#include <vector>

#include "fd_check.hpp"
#include "mffseg/data.hpp"
#include "mffseg/discriminator.hpp"
#include "mffseg/losses.hpp"
#include "mffseg/segmentor.hpp"

namespace mffseg::testing {

enum class Objective { Main, Aux, Adv };

inline const char* objective_name(Objective o) {
    switch (o) {
        case Objective::Main: return "L_main";
        case Objective::Aux: return "L_aux";
        case Objective::Adv: return "L_adv";
    }
    return "?";
}

struct GradCheck {
    FdResult result;
    int input_size = 0;
};

// Batch 4: with fewer samples the 1x1 deepest stage degenerates under
// batch-norm. The adversarial objective needs a >= 32x32 probability map, so
// it runs on a 64x64 input (32x32 main logits). Coordinates sitting on a
// ReLU kink are screened out, see check_param_gradients.
inline GradCheck objective_gradcheck(Objective objective, std::size_t coords, std::uint64_t seed, int batch = 4,
                                     double kink_tol = 1e-3, double grad_scale = 1.0) {
    const int size = objective == Objective::Adv ? 64 : 32;
    const int k = 2;
    nn::Segmentor<double> seg(nn::NetworkConfig::miniature(k), seed);
    adv::Discriminator<double> disc(k, seed + 1);
    const auto x = random_tensor<double>({batch, 3, size, size}, seed + 2);
    std::vector<LabelMap> labels;
    for (int n = 0; n < batch; ++n) labels.push_back(random_labels(size, size, k, seed + 3 + n));
    std::vector<LabelMap> main_labels, aux_labels;
    for (const auto& l : labels) {
        main_labels.push_back(data::downsample_labels(l, 2));
        aux_labels.push_back(data::downsample_labels(l, 16));
    }

    // Returns the objective; fills the logit gradients when asked.
    auto evaluate = [&](nn::Tensor<double>* d_main, nn::Tensor<double>* d_aux) {
        const auto out = seg.forward(x, nn::Phase::Train);
        if (d_main) *d_main = nn::Tensor<double>(out.main_logits.shape());
        if (d_aux) *d_aux = nn::Tensor<double>(out.aux_logits.shape());
        switch (objective) {
            case Objective::Main:
                return obj::cross_entropy_2d(out.main_logits, std::span<const LabelMap>(main_labels), d_main);
            case Objective::Aux:
                return obj::cross_entropy_2d(out.aux_logits, std::span<const LabelMap>(aux_labels), d_aux);
            case Objective::Adv: {
                const auto probs = nn::softmax_channels(out.main_logits);
                nn::Tensor<double> gz;
                const double l = obj::bce_with_logits(disc.forward_logits(probs, nn::Phase::Train), 1.0,
                                                      d_main ? &gz : nullptr);
                if (d_main) *d_main = nn::softmax_channels_backward(probs, disc.backward_logits(gz));
                return l;
            }
        }
        return 0.0;
    };

    nn::Tensor<double> d_main, d_aux;
    seg.refs().zero_grad();
    evaluate(&d_main, &d_aux);
    seg.backward(d_main, d_aux);
    // grad_scale != 1 plants a known error; tests use it to prove the check bites.
    if (grad_scale != 1.0)
        for (auto& p : seg.refs().params) p.param->grad *= grad_scale;
    GradCheck out;
    out.input_size = size;
    out.result = check_param_gradients(seg.refs(), [&] { return evaluate(nullptr, nullptr); }, coords, seed + 99,
                                       1e-5, kink_tol);
    return out;
}

}  // namespace mffseg::testing
