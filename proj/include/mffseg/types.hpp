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

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mffseg/error.hpp"

namespace mffseg {

enum class TaskKind { Binary, Parts, Instruments };

struct TaskSpec {
    TaskKind kind = TaskKind::Binary;
    int num_classes = 2;
    std::vector<std::string> class_names;

    static TaskSpec binary();
    static TaskSpec parts();
    static TaskSpec instruments();
    static TaskSpec from_kind(TaskKind kind);
    // "binary" | "parts" | "instruments"
    static TaskSpec parse(std::string_view name);
    std::string name() const;
};

// 8-bit RGB image, row-major, channels interleaved.
struct Frame {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> pixels;

    Frame() = default;
    Frame(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {}
    std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    std::uint8_t at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    bool operator==(const Frame&) const = default;
};

// Mean-subtracted unit-scale image, channel-planar (3 x H x W).
struct NormalizedFrame {
    int height = 0;
    int width = 0;
    std::vector<float> planes;
};

// Per-pixel class indices in [0, num_classes).
struct LabelMap {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> indices;

    LabelMap() = default;
    LabelMap(int h, int w, std::uint8_t fill = 0)
        : height(h), width(w), indices(static_cast<std::size_t>(h) * w, fill) {}
    std::uint8_t& at(int y, int x) { return indices[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return indices[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const { return indices.size(); }
    bool operator==(const LabelMap&) const = default;

    // Throws DataError if any value is >= num_classes.
    void check_range(int num_classes) const;
};

}  // namespace mffseg
