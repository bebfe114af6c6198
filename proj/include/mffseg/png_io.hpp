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
#include <filesystem>
#include <vector>

#include "mffseg/types.hpp"

namespace mffseg::io {

// 8-bit image as decoded from disk; channels is 1 (gray) or 3 (RGB). Alpha
// and 16-bit inputs are reduced to these on read.
struct Image8 {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;
};

Image8 read_png(const std::filesystem::path& path);
Frame read_frame(const std::filesystem::path& path);
// Single-channel read; RGB inputs keep their first channel.
LabelMap read_gray(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const Image8& image);
void write_frame(const std::filesystem::path& path, const Frame& frame);
void write_gray(const std::filesystem::path& path, const LabelMap& map);

}  // namespace mffseg::io
