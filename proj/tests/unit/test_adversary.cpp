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

#include <numeric>

#include "doctest.h"
#include "fd_check.hpp"
#include "helpers.hpp"
#include "mffseg/discriminator.hpp"
#include "separability.hpp"

using namespace mffseg;
using namespace mffseg::adv;
using nn::Shape;
using testing::random_tensor;

TEST_SUITE("adversary") {

TEST_CASE("discriminator scores every pixel of the input map") {
    for (int k : {2, 4, 8}) {
        Discriminator<float> disc(k, 1);
        const auto p = nn::softmax_channels(random_tensor<float>({2, k, 64, 96}, 2));
        const auto logits = disc.forward_logits(p, nn::Phase::Eval);
        CHECK(logits.shape() == Shape{2, 1, 64, 96});
        const auto scores = disc.forward(p, nn::Phase::Eval);
        for (float v : scores.values()) {
            CHECK(v > 0.0f);
            CHECK(v < 1.0f);
        }
    }
}

TEST_CASE("discriminator parameter count follows the 4x4 conv widths") {
    for (int k : {2, 8}) {
        Discriminator<float> disc(k, 0);
        const std::size_t want = (k * 16 + 1) * 64 + (64 * 16 + 1) * 128 + (128 * 16 + 1) * 256 +
                                 (256 * 16 + 1) * 512 + (512 * 16 + 1);
        CHECK(disc.parameter_count() == want);
    }
}

TEST_CASE("discriminator rejects wrong channels and maps below 32x32") {
    Discriminator<float> disc(4, 0);
    CHECK_THROWS_AS(disc.forward(nn::Tensor<float>({1, 2, 32, 32}), nn::Phase::Eval), ShapeError);
    CHECK_THROWS_AS(disc.forward(nn::Tensor<float>({1, 4, 16, 64}), nn::Phase::Eval), ShapeError);
    CHECK_THROWS_AS(Discriminator<float>(1, 0), ConfigError);
}

TEST_CASE("discriminator initialization depends only on its seed") {
    const auto p = nn::softmax_channels(random_tensor<float>({1, 2, 32, 32}, 3));
    Discriminator<float> a(2, 5), b(2, 5), c(2, 6);
    const auto sa = a.forward_logits(p, nn::Phase::Eval);
    const auto sb = b.forward_logits(p, nn::Phase::Eval);
    const auto sc = c.forward_logits(p, nn::Phase::Eval);
    CHECK(std::equal(sa.values().begin(), sa.values().end(), sb.values().begin()));
    CHECK(!std::equal(sa.values().begin(), sa.values().end(), sc.values().begin()));
}

TEST_CASE("discriminator gradients match central differences") {
    Discriminator<double> disc(3, 7);
    auto p = nn::softmax_channels(random_tensor<double>({2, 3, 32, 32}, 8, -2, 2));
    auto r = random_tensor<double>({2, 1, 32, 32}, 9);
    r *= 1.0 / static_cast<double>(r.size());
    const auto loss = [&] {
        const auto s = disc.forward_logits(p, nn::Phase::Train);
        return std::inner_product(r.values().begin(), r.values().end(), s.values().begin(), 0.0);
    };
    disc.refs().zero_grad();
    disc.forward_logits(p, nn::Phase::Train);
    const auto dp = disc.backward_logits(r);
    CHECK(dp.shape() == p.shape());
    CHECK(testing::check_param_gradients(disc.refs(), loss, 50, 10).worst < 1e-4);
    Rng rng(11);
    double worst = 0;
    for (int k = 0; k < 50; ++k) {
        const auto i = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(p.size()) - 1));
        const double g = dp.data()[i];
        worst = std::max(worst, testing::relative_error(g, testing::central_difference(p.data()[i], loss, 1e-5)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("one_hot encodes each label as a unit channel vector") {
    const std::vector<LabelMap> labels{testing::random_labels(5, 6, 4, 1), testing::random_labels(5, 6, 4, 2)};
    const auto t = one_hot<double>(labels, 4);
    REQUIRE(t.shape() == Shape{2, 4, 5, 6});
    for (int n = 0; n < 2; ++n)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 6; ++x)
                for (int c = 0; c < 4; ++c) CHECK(t.at(n, c, y, x) == (labels[n].at(y, x) == c ? 1.0 : 0.0));
    CHECK_THROWS_AS(one_hot<double>(labels, 3), DataError);
    const std::vector<LabelMap> ragged{LabelMap(2, 2), LabelMap(2, 3)};
    CHECK_THROWS_AS(one_hot<double>(ragged, 2), ShapeError);
}

TEST_CASE("discriminator alone learns to separate one-hot maps from soft maps") {
    const auto r = testing::discriminator_separability(200, 2, 1);
    CHECK(r.mean_accuracy >= 0.9);
    CHECK(r.heldout_real_confidence > r.heldout_fake_confidence);
}

}  // TEST_SUITE
