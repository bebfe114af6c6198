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

#include <chrono>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "mffseg/bench.hpp"
#include "mffseg/checkpoint.hpp"

using namespace mffseg;
using namespace mffseg::bench;
using nn::Shape;

TEST_SUITE("bench") {

TEST_CASE("fps is 1000 over the mean latency and percentiles are ordered") {
    auto busy = [](const nn::Tensor<float>& x) {
        volatile double s = 0;
        for (int rep = 0; rep < 20; ++rep)
            for (float v : x.values()) s = s + v;
    };
    const auto r = time_forward(busy, {1, 3, 64, 64}, {});
    CHECK(testing::relative_error(r.fps, 1000.0 / r.mean_ms) <= 1e-6);
    CHECK(r.p50_ms <= r.p95_ms);
    CHECK(r.warmup_iters == 5);
    CHECK(r.timed_iters == 30);
    CHECK(r.input_shape.n == 1);
    CHECK(!r.hardware.empty());
}

TEST_CASE("forward runs exactly warmup + timed times on one materialized input") {
    int calls = 0;
    const float* seen = nullptr;
    bool same_input = true;
    BenchOptions opts;
    opts.warmup = 6;
    opts.iters = 31;
    time_forward(
        [&](const nn::Tensor<float>& x) {
            ++calls;
            if (seen && seen != x.data()) same_input = false;
            seen = x.data();
        },
        {1, 3, 32, 32}, opts);
    CHECK(calls == 37);
    CHECK(same_input);
}

TEST_CASE("protocol limits are enforced") {
    auto noop = [](const nn::Tensor<float>&) {};
    BenchOptions few_warm;
    few_warm.warmup = 4;
    CHECK_THROWS_AS(time_forward(noop, {1, 3, 32, 32}, few_warm), ConfigError);
    BenchOptions few_iters;
    few_iters.iters = 29;
    CHECK_THROWS_AS(time_forward(noop, {1, 3, 32, 32}, few_iters), ConfigError);
    CHECK_THROWS_AS(time_forward(noop, {2, 3, 32, 32}, {}), ConfigError);
}

TEST_CASE("preprocessing runs once and outside the timed region") {
    int hook_calls = 0;
    BenchOptions opts;
    opts.preprocess = [&](nn::Tensor<float>& x) {
        ++hook_calls;
        std::this_thread::sleep_for(std::chrono::milliseconds(300));
        x.fill(1.0f);
    };
    bool saw_preprocessed = true;
    const auto r = time_forward(
        [&](const nn::Tensor<float>& x) { saw_preprocessed = saw_preprocessed && x.data()[0] == 1.0f; },
        {1, 3, 32, 32}, opts);
    CHECK(hook_calls == 1);
    CHECK(saw_preprocessed);
    CHECK(r.mean_ms < 5.0);
}

TEST_CASE("model timing reports the footprint and the branch") {
    nn::Segmentor<float> seg(nn::NetworkConfig::miniature(2), 1);
    const auto fp = model_footprint(seg);
    CHECK(fp.total_params == seg.parameter_count());
    CHECK(fp.weight_bytes == ckpt::serialized_weight_bytes(seg));
    const auto r = time_inference(seg, {1, 3, 64, 64}, infer::Branch::Auxiliary, {}, 2);
    CHECK(r.branch == "auxiliary");
    CHECK(r.total_params == fp.total_params);
    CHECK(r.weight_bytes == fp.weight_bytes);
    CHECK(to_text(r).find("fps=") != std::string::npos);
    CHECK(summary_line(r).find('|') != std::string::npos);
}

TEST_CASE("model timing refuses trainer-owned models, class mismatches and bad shapes") {
    nn::Segmentor<float> seg(nn::NetworkConfig::miniature(2), 1);
    CHECK_THROWS_AS(time_inference(seg, {1, 3, 64, 64}, infer::Branch::Main, {}, 4), ConfigError);
    CHECK_THROWS_AS(time_inference(seg, {1, 3, 60, 64}, infer::Branch::Main), ShapeError);
    seg.set_owned_by_trainer(true);
    try {
        time_inference(seg, {1, 3, 64, 64}, infer::Branch::Main);
        FAIL("expected refusal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Runtime);
    }
}

}  // TEST_SUITE
