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

#include "mffseg/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "mffseg/checkpoint.hpp"

namespace mffseg::bench {

Footprint model_footprint(nn::Segmentor<float>& segmentor) {
    return {segmentor.parameter_count(), nn::serialized_weight_bytes(segmentor)};
}

namespace {

// Nearest-rank percentile of sorted samples.
double percentile(const std::vector<double>& sorted, double q) {
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
    return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

BenchReport time_forward(const std::function<void(const nn::Tensor<float>&)>& forward, nn::Shape input_shape,
                         const BenchOptions& options) {
    MFFSEG_CHECK(options.warmup >= 5, ConfigError, "bench: warmup must be >= 5");
    MFFSEG_CHECK(options.iters >= 30, ConfigError, "bench: timed iterations must be >= 30");
    MFFSEG_CHECK(input_shape.n == 1, ConfigError, "bench: batch size is fixed at 1 (got " + input_shape.str() + ")");

    nn::Tensor<float> input(input_shape);
    Rng rng(0x5EED);
    for (auto& v : input.values()) v = static_cast<float>(uniform(rng, -0.5, 0.5));
    if (options.preprocess) options.preprocess(input);

    for (int i = 0; i < options.warmup; ++i) forward(input);
    std::vector<double> ms;
    ms.reserve(options.iters);
    for (int i = 0; i < options.iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        forward(input);
        const auto t1 = std::chrono::steady_clock::now();
        ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    BenchReport r;
    double sum = 0.0;
    for (double v : ms) sum += v;
    r.mean_ms = sum / static_cast<double>(ms.size());
    r.fps = 1000.0 / r.mean_ms;
    std::sort(ms.begin(), ms.end());
    r.p50_ms = percentile(ms, 0.50);
    r.p95_ms = percentile(ms, 0.95);
    r.input_shape = input_shape;
    r.warmup_iters = options.warmup;
    r.timed_iters = options.iters;
    r.hardware = hardware_description();
    return r;
}

BenchReport time_inference(nn::Segmentor<float>& segmentor, nn::Shape input_shape, infer::Branch branch,
                           const BenchOptions& options, std::optional<int> num_classes) {
    if (segmentor.owned_by_trainer()) throw Error(ErrorKind::Runtime, "bench: model is owned by a running trainer");
    if (num_classes) {
        MFFSEG_CHECK(*num_classes == segmentor.config().num_classes, ConfigError,
                     "bench: task has " + std::to_string(*num_classes) + " classes, model has " +
                         std::to_string(segmentor.config().num_classes));
    }
    nn::Segmentor<float>::check_input(input_shape);
    BenchReport r = time_forward(
        [&](const nn::Tensor<float>& x) { (void)infer::class_scores(segmentor, x, branch); }, input_shape, options);
    const auto fp = model_footprint(segmentor);
    r.total_params = fp.total_params;
    r.weight_bytes = fp.weight_bytes;
    r.branch = infer::branch_name(branch);
    return r;
}

std::string hardware_description() {
    std::string cpu = "unknown cpu";
    std::ifstream info("/proc/cpuinfo");
    for (std::string line; std::getline(info, line);) {
        if (line.starts_with("model name")) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) cpu = line.substr(colon + 2);
            break;
        }
    }
    std::ostringstream out;
    out << cpu << "; hardware_threads=" << std::thread::hardware_concurrency() << "; compute_threads=1";
#if defined(__clang__)
    out << "; clang " << __clang_major__ << "." << __clang_minor__;
#elif defined(__GNUC__)
    out << "; gcc " << __GNUC__ << "." << __GNUC_MINOR__;
#endif
    return out.str();
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string to_text(const BenchReport& r) {
    std::ostringstream out;
    out << "# memory_mb is the serialized weight size\n";
    out << "branch=" << r.branch << "\n";
    out << "input_shape=" << r.input_shape.str() << "\n";
    out << "warmup_iters=" << r.warmup_iters << "\n";
    out << "timed_iters=" << r.timed_iters << "\n";
    out << "mean_ms=" << num(r.mean_ms) << "\n";
    out << "fps=" << num(r.fps) << "\n";
    out << "p50_ms=" << num(r.p50_ms) << "\n";
    out << "p95_ms=" << num(r.p95_ms) << "\n";
    out << "total_params=" << r.total_params << "\n";
    out << "weight_bytes=" << r.weight_bytes << "\n";
    out << "memory_mb=" << num(static_cast<double>(r.weight_bytes) / (1024.0 * 1024.0)) << "\n";
    out << "hardware=" << r.hardware << "\n";
    return out.str();
}

std::string summary_line(const BenchReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %s | time %.2f ms | %.2f fps | memory %.2f MB | params %.2f M", r.branch.c_str(),
                  r.input_shape.str().c_str(), r.mean_ms, r.fps, static_cast<double>(r.weight_bytes) / (1024.0 * 1024.0),
                  static_cast<double>(r.total_params) / 1e6);
    return buf;
}

}  // namespace mffseg::bench
