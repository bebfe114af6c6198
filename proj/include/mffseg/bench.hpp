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

#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "mffseg/inference.hpp"

namespace mffseg::bench {

struct BenchReport {
    double mean_ms = 0.0;
    double fps = 0.0;  // 1000 / mean_ms
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    std::size_t total_params = 0;
    std::size_t weight_bytes = 0;  // serialized weight container size
    nn::Shape input_shape;
    int warmup_iters = 0;
    int timed_iters = 0;
    std::string branch = "main";
    std::string hardware;
};

struct BenchOptions {
    int warmup = 5;   // >= 5
    int iters = 30;   // >= 30
    // Applied once to the pre-materialized input before any timing.
    std::function<void(nn::Tensor<float>&)> preprocess;
};

struct Footprint {
    std::size_t total_params = 0;
    std::size_t weight_bytes = 0;
};

Footprint model_footprint(nn::Segmentor<float>& segmentor);

// Times `forward` only, once per iteration, on a single input materialized up
// front. Fills the timing fields of the report.
BenchReport time_forward(const std::function<void(const nn::Tensor<float>&)>& forward, nn::Shape input_shape,
                         const BenchOptions& options);

// Batch-1 model-only latency of one exit. `num_classes`, when given, must
// match the model. Refuses to run while a trainer owns the model.
BenchReport time_inference(nn::Segmentor<float>& segmentor, nn::Shape input_shape, infer::Branch branch,
                           const BenchOptions& options = {}, std::optional<int> num_classes = std::nullopt);

// Host description: CPU model, hardware threads, compiler.
std::string hardware_description();

// key=value record, one field per line.
std::string to_text(const BenchReport& report);
// Time (ms) | fps | Memory (MB) | Params (M)
std::string summary_line(const BenchReport& report);

}  // namespace mffseg::bench
