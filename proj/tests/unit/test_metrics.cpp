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

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "metric_oracles.hpp"
#include "mffseg/metrics.hpp"

using namespace mffseg;
using namespace mffseg::metrics;

namespace {

LabelMap points(int h, int w, std::initializer_list<std::pair<int, int>> pts) {
    LabelMap m(h, w);
    for (auto [y, x] : pts) m.at(y, x) = 1;
    return m;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("every metric equals its brute-force oracle on random 8x8 masks") {
    const auto s = testing::compare_metric_oracles(1000, 1);
    CHECK(s.pairs == 1000);
    CHECK(s.empty_pairs > 50);
    CHECK(s.mismatches == 0);
    CHECK(s.worst <= 1e-9);
}

TEST_CASE("distance transform stays exact on larger masks") {
    const auto s = testing::compare_metric_oracles(60, 2, 37, 53);
    CHECK(s.mismatches == 0);
}

TEST_CASE("dice conventions") {
    const LabelMap empty(4, 4);
    const LabelMap a = points(4, 4, {{0, 0}, {1, 1}});
    const LabelMap b = points(4, 4, {{2, 2}});
    CHECK(dice(empty, empty) == 1.0);
    CHECK(dice(a, empty) == 0.0);
    CHECK(dice(empty, a) == 0.0);
    CHECK(dice(a, a) == 1.0);
    CHECK(dice(a, b) == 0.0);
    CHECK(dice(a, points(4, 4, {{0, 0}})) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(dice(a, LabelMap(4, 5)), ShapeError);
}

TEST_CASE("hausdorff distance properties") {
    CHECK(*hausdorff(points(9, 9, {{0, 0}}), points(9, 9, {{3, 4}})) == doctest::Approx(5.0));
    const LabelMap a = points(9, 9, {{0, 0}, {8, 8}});
    const LabelMap b = points(9, 9, {{0, 1}});
    CHECK(*hausdorff(a, b) == doctest::Approx(std::hypot(8.0, 7.0)));
    CHECK(*hausdorff(a, b) == *hausdorff(b, a));
    CHECK(*hausdorff(a, a) == 0.0);
    CHECK(!hausdorff(a, LabelMap(9, 9)).has_value());
    CHECK(!hausdorff(LabelMap(9, 9), LabelMap(9, 9)).has_value());

    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const auto x = testing::random_mask(10, 10, 0.2, rng), y = testing::random_mask(10, 10, 0.2, rng),
                   z = testing::random_mask(10, 10, 0.2, rng);
        const auto xy = hausdorff(x, y), yz = hausdorff(y, z), xz = hausdorff(x, z);
        if (xy && yz && xz) CHECK(*xz <= *xy + *yz + 1e-12);
    }
}

TEST_CASE("specificity and sensitivity from counts") {
    CHECK(specificity({3, 1, 6, 2}) == doctest::Approx(6.0 / 7.0));
    CHECK(sensitivity({3, 1, 6, 2}) == doctest::Approx(3.0 / 5.0));
    CHECK(specificity({4, 0, 0, 0}) == 1.0);
    CHECK(sensitivity({0, 0, 4, 0}) == 1.0);
}

TEST_CASE("class masks select one label value") {
    const LabelMap l = testing::random_labels(5, 5, 4, 4);
    const LabelMap m = class_mask(l, 2);
    for (std::size_t i = 0; i < l.indices.size(); ++i) CHECK(m.indices[i] == (l.indices[i] == 2 ? 1 : 0));
    const auto c = confusion_counts(l, l, 2);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.total() == 25);
}

TEST_CASE("multiclass headline averages foreground classes present in the ground truth") {
    const TaskSpec task = TaskSpec::parts();
    LabelMap gt(4, 4), pred(4, 4);
    gt.at(0, 0) = 1;
    gt.at(0, 1) = 1;
    gt.at(3, 3) = 2;
    pred.at(0, 0) = 1;   // class 1: dice 2/3
    pred.at(3, 3) = 2;   // class 2: dice 1
    pred.at(2, 0) = 3;   // class 3 only predicted: dice 0, not in the headline
    const auto r = evaluate_multiclass(pred, gt, task);
    CHECK(r.mean_foreground_dice == doctest::Approx((2.0 / 3.0 + 1.0) / 2.0));
    CHECK(r.per_class[3].evaluated);
    CHECK(r.per_class[3].dice == 0.0);
    CHECK(r.per_class[1].name == "Shaft");

    CHECK(evaluate_multiclass(gt, gt, task).mean_foreground_dice == 1.0);
    CHECK(evaluate_multiclass(LabelMap(4, 4), LabelMap(4, 4), task).mean_foreground_dice == 1.0);
    CHECK(evaluate_multiclass(pred, LabelMap(4, 4), task).mean_foreground_dice == 0.0);
    const auto absent = evaluate_multiclass(LabelMap(4, 4), LabelMap(4, 4), task);
    CHECK(!absent.per_class[2].evaluated);
    CHECK_THROWS(evaluate_multiclass(LabelMap(4, 4, 4), gt, task));
}

TEST_CASE("accumulator reports per-image means") {
    const TaskSpec task = TaskSpec::binary();
    MetricAccumulator acc(task);
    const LabelMap gt = points(4, 4, {{0, 0}, {0, 1}});
    acc.add(gt, gt);                          // dice 1, hausdorff 0
    acc.add(points(4, 4, {{0, 0}}), gt);      // dice 2/3, hausdorff 1
    acc.add(LabelMap(4, 4), LabelMap(4, 4));  // no foreground anywhere: headline 1
    const auto r = acc.finish();
    CHECK(r.images == 3);
    CHECK(r.mean_foreground_dice == doctest::Approx((1.0 + 2.0 / 3.0 + 1.0) / 3.0));
    CHECK(r.per_class[1].images == 2);
    CHECK(r.per_class[1].dice == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
    CHECK(*r.per_class[1].hausdorff == doctest::Approx(0.5));
    CHECK(r.per_class[0].images == 3);
    CHECK_THROWS_AS(acc.add(evaluate_multiclass(LabelMap(2, 2), LabelMap(2, 2), TaskSpec::parts())), ConfigError);
}

TEST_CASE("reports render as text and json") {
    MetricAccumulator acc(TaskSpec::instruments());
    LabelMap gt(4, 4);
    gt.at(1, 1) = 3;
    acc.add(gt, gt);
    auto r = acc.finish();
    r.fps = 12.5;
    const std::string text = to_text(r);
    CHECK(text.find("class\tname\tdice") != std::string::npos);
    CHECK(text.find("mean_foreground_dice=1.000000") != std::string::npos);
    CHECK(text.find("fps=12.500000") != std::string::npos);
    const auto j = nlohmann::json::parse(to_json(r));
    CHECK(j["task"] == "instruments");
    CHECK(j["per_class"].size() == 8);
    CHECK(j["per_class"][3]["dice"] == 1.0);
    CHECK(j["per_class"][5]["evaluated"] == false);
    CHECK(j["fps"] == 12.5);
}

}  // TEST_SUITE
