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

// Shared fixtures for the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "mffseg/rng.hpp"
#include "mffseg/tensor.hpp"
#include "mffseg/types.hpp"

namespace mffseg::testing {

template <typename T>
nn::Tensor<T> random_tensor(nn::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    nn::Tensor<T> t(shape);
    Rng rng(seed);
    for (auto& v : t.values()) v = static_cast<T>(uniform(rng, lo, hi));
    return t;
}

inline LabelMap random_labels(int h, int w, int num_classes, std::uint64_t seed) {
    LabelMap m(h, w);
    Rng rng(seed);
    for (auto& v : m.indices) v = static_cast<std::uint8_t>(uniform_int(rng, 0, num_classes - 1));
    return m;
}

// Bernoulli(p) mask with values {0, 1}.
inline LabelMap random_mask(int h, int w, double p, Rng& rng) {
    LabelMap m(h, w);
    for (auto& v : m.indices) v = bernoulli(rng, p) ? 1 : 0;
    return m;
}

inline double relative_error(double a, double b, double floor = 1e-7) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Fresh empty directory under the system temp dir.
// First number in a golden file; lines starting with '#' are skipped.
inline std::optional<std::size_t> read_golden_count(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        return std::stoull(line);
    }
    return std::nullopt;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("mffseg_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace mffseg::testing
