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

#include "mffseg/palette.hpp"

namespace mffseg::viz {

namespace {

constexpr std::array<Rgb, 2> kBinary{{{0, 0, 0}, {0, 255, 0}}};
constexpr std::array<Rgb, 4> kParts{{{0, 0, 0}, {230, 25, 75}, {60, 180, 75}, {255, 225, 25}}};
constexpr std::array<Rgb, 8> kInstruments{{{0, 0, 0},
                                            {0, 130, 200},
                                            {245, 130, 48},
                                            {145, 30, 180},
                                            {70, 240, 240},
                                            {240, 50, 230},
                                            {210, 245, 60},
                                            {250, 190, 212}}};

}  // namespace

Rgb class_color(const TaskSpec& task, int cls) {
    MFFSEG_CHECK(cls >= 1 && cls < task.num_classes, DataError,
                 "palette: class " + std::to_string(cls) + " outside 1.." + std::to_string(task.num_classes - 1));
    switch (task.kind) {
        case TaskKind::Binary: return kBinary[cls];
        case TaskKind::Parts: return kParts[cls];
        case TaskKind::Instruments: return kInstruments[cls];
    }
    return {0, 0, 0};
}

Frame overlay(const Frame& frame, const LabelMap& labels, const TaskSpec& task) {
    MFFSEG_CHECK(frame.height == labels.height && frame.width == labels.width, ShapeError,
                 "overlay: frame and label extents differ");
    labels.check_range(task.num_classes);
    Frame out = frame;
    for (int y = 0; y < frame.height; ++y) {
        for (int x = 0; x < frame.width; ++x) {
            const int k = labels.at(y, x);
            if (k == 0) continue;
            const auto c = class_color(task, k);
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = static_cast<std::uint8_t>((frame.at(y, x, ch) + c[ch] + 1) / 2);
        }
    }
    return out;
}

}  // namespace mffseg::viz
