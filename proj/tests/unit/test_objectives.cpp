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

#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gradcheck.hpp"
#include "helpers.hpp"
#include "mffseg/losses.hpp"

using namespace mffseg;
using namespace mffseg::obj;
using nn::Shape;
using testing::random_tensor;

namespace {

// -log softmax(z)[label] averaged over pixels, straight from the definition.
double ce_oracle(const Tensor<double>& z, const std::vector<LabelMap>& labels) {
    double total = 0;
    for (int n = 0; n < z.n(); ++n)
        for (int y = 0; y < z.h(); ++y)
            for (int x = 0; x < z.w(); ++x) {
                double denom = 0;
                for (int c = 0; c < z.c(); ++c) denom += std::exp(z.at(n, c, y, x));
                total -= std::log(std::exp(z.at(n, labels[n].at(y, x), y, x)) / denom);
            }
    return total / (static_cast<double>(z.n()) * z.h() * z.w());
}

Tensor<double> filled(Shape s, double v) { return Tensor<double>(s, v); }

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("default loss weights") {
    const LossWeights w;
    CHECK(w.lambda_aux == 0.4);
    CHECK(w.lambda_adv == 0.01);
    CHECK_THROWS_AS((LossWeights{-0.1, 0.01}.validate()), ConfigError);
    CHECK_THROWS_AS((LossWeights{0.4, -1.0}.validate()), ConfigError);
}

TEST_CASE("total loss composes the weighted terms") {
    Rng rng(1);
    const LossWeights w;
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
        LossBreakdown seg;
        seg.main = uniform(rng, 0, 10);
        seg.aux = uniform(rng, 0, 10);
        const double adv = uniform(rng, 0, 10);
        seg.total = seg.main + w.lambda_aux * seg.aux;
        const auto t = total_loss(seg, adv, w);
        worst = std::max(worst, std::abs(t.total - (seg.main + 0.4 * seg.aux + 0.01 * adv)));
        worst = std::max(worst, std::abs(t.total - (seg.total + 0.01 * adv)));
        CHECK(t.adv == adv);
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("cross entropy closed forms") {
    const std::vector<LabelMap> labels{testing::random_labels(3, 4, 5, 1)};
    CHECK(cross_entropy_2d(filled({1, 5, 3, 4}, 0.7), std::span<const LabelMap>(labels)) ==
          doctest::Approx(std::log(5.0)).epsilon(1e-12));
    Tensor<double> confident({1, 5, 3, 4}, -50.0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) confident.at(0, labels[0].at(y, x), y, x) = 50.0;
    CHECK(cross_entropy_2d(confident, std::span<const LabelMap>(labels)) < 1e-12);
    // Large logits must not overflow.
    Tensor<double> wrong({1, 5, 3, 4}, 0.0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) wrong.at(0, (labels[0].at(y, x) + 1) % 5, y, x) = 1000.0;
    CHECK(cross_entropy_2d(wrong, std::span<const LabelMap>(labels)) == doctest::Approx(1000.0));
}

TEST_CASE("cross entropy matches the oracle and its gradient") {
    const auto z = random_tensor<double>({2, 4, 3, 5}, 2, -3, 3);
    const std::vector<LabelMap> labels{testing::random_labels(3, 5, 4, 3), testing::random_labels(3, 5, 4, 4)};
    Tensor<double> g;
    const double l = cross_entropy_2d(z, std::span<const LabelMap>(labels), &g);
    CHECK(l == doctest::Approx(ce_oracle(z, labels)).epsilon(1e-12));
    const auto p = nn::softmax_channels(z);
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 4; ++c)
            for (int y = 0; y < 3; ++y)
                for (int x = 0; x < 5; ++x) {
                    const double want = (p.at(n, c, y, x) - (labels[n].at(y, x) == c)) / 30.0;
                    CHECK(g.at(n, c, y, x) == doctest::Approx(want).epsilon(1e-12));
                }
    Tensor<double> zz = z;
    double worst = 0;
    for (std::size_t i = 0; i < zz.size(); ++i) {
        const double num = testing::central_difference(
            zz.data()[i], [&] { return cross_entropy_2d(zz, std::span<const LabelMap>(labels)); }, 1e-6);
        worst = std::max(worst, testing::relative_error(g.data()[i], num));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("cross entropy rejects mismatched labels") {
    const std::vector<LabelMap> labels{testing::random_labels(3, 4, 2, 1)};
    CHECK_THROWS_AS(cross_entropy_2d(filled({1, 2, 4, 4}, 0), std::span<const LabelMap>(labels)), ShapeError);
    CHECK_THROWS_AS(cross_entropy_2d(filled({2, 2, 3, 4}, 0), std::span<const LabelMap>(labels)), ShapeError);
    const std::vector<LabelMap> big{LabelMap(3, 4, 5)};
    CHECK_THROWS(cross_entropy_2d(filled({1, 2, 3, 4}, 0), std::span<const LabelMap>(big)));
}

TEST_CASE("segmentation loss weighs the auxiliary term on downsampled labels") {
    const std::vector<LabelMap> labels{testing::random_labels(64, 32, 3, 5), testing::random_labels(64, 32, 3, 6)};
    const auto main = random_tensor<double>({2, 3, 32, 16}, 7);
    const auto aux = random_tensor<double>({2, 3, 4, 2}, 8);
    std::vector<LabelMap> l2, l16;
    for (const auto& l : labels) {
        l2.push_back(data::downsample_labels(l, 2));
        l16.push_back(data::downsample_labels(l, 16));
    }
    SegLossGrads<double> g;
    const auto out = seg_loss(main, aux, std::span<const LabelMap>(labels), LossWeights{}, &g);
    CHECK(out.main == doctest::Approx(ce_oracle(main, l2)).epsilon(1e-12));
    CHECK(out.aux == doctest::Approx(ce_oracle(aux, l16)).epsilon(1e-12));
    CHECK(out.total == doctest::Approx(out.main + 0.4 * out.aux).epsilon(1e-12));
    CHECK(out.adv == 0.0);
    Tensor<double> ga;
    cross_entropy_2d(aux, std::span<const LabelMap>(l16), &ga);
    for (std::size_t i = 0; i < ga.size(); ++i) CHECK(g.d_aux.data()[i] == doctest::Approx(0.4 * ga.data()[i]));
    CHECK_THROWS_AS(seg_loss(random_tensor<double>({2, 3, 24, 16}, 1), aux, std::span<const LabelMap>(labels),
                             LossWeights{}),
                    ShapeError);
}

TEST_CASE("confidence-map losses") {
    const auto half = filled({1, 1, 4, 4}, 0.5);
    CHECK(adv_loss_segmentor(half) == doctest::Approx(std::log(2.0)));
    CHECK(disc_loss(half, half) == doctest::Approx(2.0 * std::log(2.0)));
    const auto hi = filled({1, 1, 2, 2}, 0.9), lo = filled({1, 1, 2, 2}, 0.1);
    CHECK(disc_loss(hi, lo) == doctest::Approx(-2.0 * std::log(0.9)));
    CHECK_THROWS_AS(adv_loss_segmentor(filled({1, 1, 2, 2}, 0.0)), NumericalError);
    CHECK_THROWS_AS(disc_loss(filled({1, 1, 2, 2}, 1.0), lo), NumericalError);
    CHECK_THROWS_AS(disc_loss(hi, filled({1, 1, 2, 2}, 1.0)), NumericalError);
}

TEST_CASE("logit-domain BCE agrees with the probability form and stays finite") {
    const auto s = random_tensor<double>({2, 1, 3, 3}, 9, -6, 6);
    const auto c = nn::sigmoid(s);
    CHECK(bce_with_logits(s, 1.0) == doctest::Approx(adv_loss_segmentor(c)).epsilon(1e-12));
    CHECK(bce_with_logits(s, 1.0) + bce_with_logits(s, 0.0) ==
          doctest::Approx(disc_loss(c, c)).epsilon(1e-12));
    Tensor<double> g;
    bce_with_logits(s, 0.0, &g);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(g.data()[i] == doctest::Approx(c.data()[i] / 18.0));
    const auto extreme = filled({1, 1, 1, 2}, 800.0);
    CHECK(std::isfinite(bce_with_logits(extreme, 0.0)));
    CHECK(bce_with_logits(extreme, 0.0) == doctest::Approx(800.0));
    CHECK(bce_with_logits(extreme, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS(bce_with_logits(s, 0.5));
}

TEST_CASE("objective gradients through the miniature segmentor match finite differences") {
    for (auto o : {testing::Objective::Main, testing::Objective::Aux, testing::Objective::Adv}) {
        CAPTURE(testing::objective_name(o));
        const auto r = testing::objective_gradcheck(o, 20, 3);
        CHECK(r.result.checked == 20);
        CHECK(r.result.worst < 1e-3);
    }
}

TEST_CASE("kink screening still catches a 1% gradient error") {
    for (auto o : {testing::Objective::Main, testing::Objective::Aux, testing::Objective::Adv}) {
        CAPTURE(testing::objective_name(o));
        const auto r = testing::objective_gradcheck(o, 20, 3, 4, 1e-3, 1.01);
        CHECK(r.result.checked == 20);
        CHECK(r.result.worst > 5e-3);
    }
}

}  // TEST_SUITE
