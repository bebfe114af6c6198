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
#include <string>
#include <vector>

#include "mffseg/data.hpp"

namespace mffseg::data {

// One rendered frame with the raw per-instrument part-code masks (unoccluded
// silhouettes, as in the real ground truth) and the label map the renderer
// painted directly for the requested task.
struct SyntheticSample {
    Frame frame;
    std::vector<InstrumentMask> masks;
    std::vector<std::string> folders;  // ground-truth folder name per mask
    LabelMap label;
};

// Textured tissue-coloured background with one or two instruments of distinct
// categories entering from outside the frame: rectangle shaft, elliptical
// wrist, triangular claspers.
SyntheticSample render_synthetic(int height, int width, const TaskSpec& task, std::uint64_t seed);

// Writes `n` samples in the EndoVis directory layout under `out_dir` (existing
// instrument_dataset_* directories there are replaced) and returns the
// scanned manifest. Sample i belongs to sequence (i % sequences) + 1.
DatasetManifest generate_synthetic(const std::filesystem::path& out_dir, int n, int height, int width,
                                   const TaskSpec& task, std::uint64_t seed, int sequences = kEndovisSequences);

}  // namespace mffseg::data
