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

#include <span>

#include "mffseg/tensor.hpp"
#include "mffseg/types.hpp"

namespace mffseg::obj {

using nn::Tensor;

struct LossWeights {
    double lambda_aux = 0.4;
    double lambda_adv = 0.01;

    // Throws ConfigError on negative weights.
    void validate() const;
};

struct LossBreakdown {
    double main = 0.0;
    double aux = 0.0;
    double adv = 0.0;
    double total = 0.0;
};

// Mean over all pixels of the batch of -log softmax(logits)[label]. Logits are
// N x K x h x w; one label map per sample, each h x w. When `grad` is given it
// receives dLoss/dlogits.
template <typename T>
double cross_entropy_2d(const Tensor<T>& logits, std::span<const LabelMap> labels, Tensor<T>* grad = nullptr);

template <typename T>
struct SegLossGrads {
    Tensor<T> d_main;
    Tensor<T> d_aux;
};

// Main CE at the main-logit scale plus lambda_aux times aux CE, labels
// nearest-neighbour downsampled from full resolution. adv is 0. Gradients
// (when requested) are of the weighted total.
template <typename T>
LossBreakdown seg_loss(const Tensor<T>& main_logits, const Tensor<T>& aux_logits, std::span<const LabelMap> labels,
                       const LossWeights& weights, SegLossGrads<T>* grads = nullptr);

// Confidence-map losses; values must lie strictly inside (0, 1).
// Mean over pixels of -ln(c).
template <typename T>
double adv_loss_segmentor(const Tensor<T>& conf_fake);

// mean -ln(real) + mean -ln(1 - fake).
template <typename T>
double disc_loss(const Tensor<T>& conf_real, const Tensor<T>& conf_fake);

// Same quantities computed from pre-sigmoid scores without forming the
// sigmoid, so saturated scores stay finite. target is 0 or 1; the gradient
// is w.r.t. the scores.
template <typename T>
double bce_with_logits(const Tensor<T>& scores, double target, Tensor<T>* grad = nullptr);

LossBreakdown total_loss(const LossBreakdown& seg, double adv, const LossWeights& weights);

}  // namespace mffseg::obj
