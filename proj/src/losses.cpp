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

#include "mffseg/losses.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mffseg/data.hpp"

namespace mffseg::obj {

void LossWeights::validate() const {
    MFFSEG_CHECK(lambda_aux >= 0.0 && lambda_adv >= 0.0, ConfigError,
                 "loss weights must be non-negative (lambda_aux=" + std::to_string(lambda_aux) +
                     ", lambda_adv=" + std::to_string(lambda_adv) + ")");
}

template <typename T>
double cross_entropy_2d(const Tensor<T>& logits, std::span<const LabelMap> labels, Tensor<T>* grad) {
    const auto& s = logits.shape();
    MFFSEG_CHECK(static_cast<int>(labels.size()) == s.n, ShapeError,
                 "cross_entropy_2d: " + std::to_string(labels.size()) + " label maps for batch of " +
                     std::to_string(s.n));
    for (const auto& l : labels) {
        MFFSEG_CHECK(l.height == s.h && l.width == s.w, ShapeError,
                     "cross_entropy_2d: labels " + std::to_string(l.height) + "x" + std::to_string(l.width) +
                         " vs logits " + s.str());
        l.check_range(s.c);
    }
    const std::size_t plane = s.plane();
    const double count = static_cast<double>(plane) * s.n;
    if (grad) *grad = Tensor<T>(s);
    double total = 0.0;
    std::vector<double> z(s.c);
    for (int n = 0; n < s.n; ++n) {
        const auto& lab = labels[n].indices;
        for (std::size_t p = 0; p < plane; ++p) {
            double mx = -INFINITY;
            for (int k = 0; k < s.c; ++k) {
                z[k] = static_cast<double>(logits.plane(n, k)[p]);
                mx = std::max(mx, z[k]);
            }
            double sum = 0.0;
            for (int k = 0; k < s.c; ++k) sum += std::exp(z[k] - mx);
            const double lse = mx + std::log(sum);
            total += lse - z[lab[p]];
            if (grad) {
                for (int k = 0; k < s.c; ++k) {
                    const double prob = std::exp(z[k] - lse);
                    grad->plane(n, k)[p] = static_cast<T>((prob - (k == lab[p] ? 1.0 : 0.0)) / count);
                }
            }
        }
    }
    return total / count;
}

template <typename T>
LossBreakdown seg_loss(const Tensor<T>& main_logits, const Tensor<T>& aux_logits, std::span<const LabelMap> labels,
                       const LossWeights& weights, SegLossGrads<T>* grads) {
    weights.validate();
    MFFSEG_CHECK(!labels.empty(), ShapeError, "seg_loss: empty batch");
    const int full_h = labels[0].height;
    auto factor_for = [&](const Tensor<T>& t, const char* which) {
        MFFSEG_CHECK(t.h() > 0 && full_h % t.h() == 0, ShapeError,
                     std::string("seg_loss: ") + which + " logits " + t.shape().str() + " do not divide labels of height " +
                         std::to_string(full_h));
        return full_h / t.h();
    };
    const int main_factor = factor_for(main_logits, "main");
    const int aux_factor = factor_for(aux_logits, "aux");
    std::vector<LabelMap> main_labels, aux_labels;
    for (const auto& l : labels) {
        main_labels.push_back(data::downsample_labels(l, main_factor));
        aux_labels.push_back(data::downsample_labels(l, aux_factor));
    }
    LossBreakdown out;
    out.main = cross_entropy_2d(main_logits, std::span<const LabelMap>(main_labels), grads ? &grads->d_main : nullptr);
    out.aux = cross_entropy_2d(aux_logits, std::span<const LabelMap>(aux_labels), grads ? &grads->d_aux : nullptr);
    if (grads) grads->d_aux *= static_cast<T>(weights.lambda_aux);
    out.total = out.main + weights.lambda_aux * out.aux;
    return out;
}

namespace {

template <typename T>
void check_confidence(const Tensor<T>& c, const char* what) {
    MFFSEG_CHECK(c.size() > 0, ShapeError, std::string(what) + ": empty confidence map");
    for (T v : c.values()) {
        MFFSEG_CHECK(v > T(0) && v < T(1), NumericalError,
                     std::string(what) + ": confidence " + std::to_string(static_cast<double>(v)) +
                         " outside (0, 1)");
    }
}

template <typename T>
double mean_neg_log(const Tensor<T>& c, bool complement) {
    double total = 0.0;
    for (T v : c.values()) total -= std::log(complement ? 1.0 - static_cast<double>(v) : static_cast<double>(v));
    return total / static_cast<double>(c.size());
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

template <typename T>
double adv_loss_segmentor(const Tensor<T>& conf_fake) {
    check_confidence(conf_fake, "adv_loss_segmentor");
    return mean_neg_log(conf_fake, false);
}

template <typename T>
double disc_loss(const Tensor<T>& conf_real, const Tensor<T>& conf_fake) {
    check_confidence(conf_real, "disc_loss");
    check_confidence(conf_fake, "disc_loss");
    return mean_neg_log(conf_real, false) + mean_neg_log(conf_fake, true);
}

template <typename T>
double bce_with_logits(const Tensor<T>& scores, double target, Tensor<T>* grad) {
    MFFSEG_CHECK(target == 0.0 || target == 1.0, ConfigError, "bce_with_logits: target must be 0 or 1");
    MFFSEG_CHECK(scores.size() > 0, ShapeError, "bce_with_logits: empty score map");
    const double count = static_cast<double>(scores.size());
    if (grad) *grad = Tensor<T>(scores.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const double z = static_cast<double>(scores.data()[i]);
        // -ln sigmoid(z) = softplus(-z); -ln(1 - sigmoid(z)) = softplus(z)
        total += target == 1.0 ? softplus(-z) : softplus(z);
        if (grad) {
            const double sig = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            grad->data()[i] = static_cast<T>((sig - target) / count);
        }
    }
    return total / count;
}

LossBreakdown total_loss(const LossBreakdown& seg, double adv, const LossWeights& weights) {
    weights.validate();
    LossBreakdown out = seg;
    out.adv = adv;
    out.total = seg.main + weights.lambda_aux * seg.aux + weights.lambda_adv * adv;
    return out;
}

#define MFFSEG_INSTANTIATE(T)                                                                              \
    template double cross_entropy_2d<T>(const Tensor<T>&, std::span<const LabelMap>, Tensor<T>*);          \
    template LossBreakdown seg_loss<T>(const Tensor<T>&, const Tensor<T>&, std::span<const LabelMap>,      \
                                       const LossWeights&, SegLossGrads<T>*);                              \
    template double adv_loss_segmentor<T>(const Tensor<T>&);                                               \
    template double disc_loss<T>(const Tensor<T>&, const Tensor<T>&);                                      \
    template double bce_with_logits<T>(const Tensor<T>&, double, Tensor<T>*);

MFFSEG_INSTANTIATE(float)
MFFSEG_INSTANTIATE(double)

#undef MFFSEG_INSTANTIATE

}  // namespace mffseg::obj
