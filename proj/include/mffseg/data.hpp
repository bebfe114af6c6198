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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mffseg/types.hpp"

namespace mffseg::data {

inline constexpr int kRawHeight = 1080;
inline constexpr int kRawWidth = 1920;

// Region of a raw 1080x1920 frame kept after removing the black side canvas.
struct CropWindow {
    int top = 28;
    int left = 320;
    int height = 1024;
    int width = 1280;
};

// 1080x1920 -> window; frames already at the window size pass through.
Frame crop_canvas(const Frame& frame, const CropWindow& window = {});
LabelMap crop_canvas(const LabelMap& map, const CropWindow& window = {});

// Ground truth for one instrument: raw part codes (0 background, 10 shaft,
// 20 wrist, 30 claspers, 40 probe) and the instrument's category (1..7).
struct InstrumentMask {
    int category = 0;
    LabelMap codes;
};

// Category code (1..7) from a ground-truth folder name such as
// "Left_Prograsp_Forceps_labels"; throws DataError for unknown instruments.
int instrument_category(std::string_view folder_name);

// Combines per-instrument masks into a task label map. Where instruments
// overlap, the one with the lowest category code owns the pixel (first listed
// on ties) for every task.
LabelMap encode_labels(std::span<const InstrumentMask> instruments, const TaskSpec& task);

struct ChannelMeans {
    std::array<double, 3> rgb{0.0, 0.0, 0.0};
};

// (pixel / 255) - mean, per channel, channel-planar output.
NormalizedFrame normalize(const Frame& frame, const ChannelMeans& means);

void hflip(Frame& frame);
void vflip(Frame& frame);
void hflip(LabelMap& map);
void vflip(LabelMap& map);

struct AugmentOptions {
    double hflip_probability = 0.5;
    double vflip_probability = 0.5;
    // Opt-in photometric/geometric extras; off by default.
    bool blur = false;
    double blur_sigma_max = 1.5;
    bool brightness = false;
    double brightness_max_delta = 0.2;
    bool skew = false;
    double skew_max = 0.1;
};

struct AugmentChoice {
    bool hflip = false;
    bool vflip = false;
};

// The flip decisions `augment` makes for `seed`.
AugmentChoice augment_choice(std::uint64_t seed, const AugmentOptions& options = {});

std::pair<Frame, LabelMap> augment(Frame frame, LabelMap label, std::uint64_t seed, const AugmentOptions& options = {});

// Nearest-neighbour subsampling: out(r, c) = in(r * factor, c * factor).
LabelMap downsample_labels(const LabelMap& label, int factor);

enum class Split { All, Train, Test };
std::string split_name(Split split);

struct Sample {
    std::string frame;                // relative to DatasetManifest::root
    std::vector<std::string> labels;  // per-instrument ground-truth images
    int sequence = 0;
    bool operator==(const Sample&) const = default;
};

struct DatasetManifest {
    std::filesystem::path root;
    std::string source = "synthetic";  // "endovis" | "synthetic"
    TaskSpec task = TaskSpec::binary();
    Split split = Split::All;
    std::vector<Sample> samples;
};

inline constexpr int kLastTrainSequence = 6;
inline constexpr int kEndovisSequences = 8;

// Sequences 1..6 train, everything later test. EndoVis manifests must contain
// all eight sequences.
std::pair<DatasetManifest, DatasetManifest> split_train_test(const DatasetManifest& manifest);

// Scans instrument_dataset_<k>/left_frames/frame<NNN>.png with ground truth in
// instrument_dataset_<k>/ground_truth/<name>_labels/frame<NNN>.png.
DatasetManifest scan_dataset(const std::filesystem::path& root, const TaskSpec& task, const std::string& source);

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest read_manifest(const std::filesystem::path& path);

void write_means(const std::filesystem::path& path, const ChannelMeans& means);
ChannelMeans read_means(const std::filesystem::path& path);

struct LoadedSample {
    Frame frame;
    LabelMap label;
};

// Reads, crops (raw frames only) and encodes one sample.
LoadedSample load_sample(const DatasetManifest& manifest, std::size_t index, const CropWindow& window = {});

// Mean of pixel/255 per channel over every frame of `manifest`.
ChannelMeans compute_channel_means(const DatasetManifest& manifest, const CropWindow& window = {});

// Use `given` when present, else compute from the training split; rejects
// when neither is available.
ChannelMeans resolve_channel_means(const std::optional<ChannelMeans>& given, const DatasetManifest* train,
                                   const CropWindow& window = {});

// Random access over a manifest with optional in-memory caching.
class Dataset {
public:
    Dataset(DatasetManifest manifest, bool cache, CropWindow window = {});
    std::size_t size() const { return manifest_.samples.size(); }
    LoadedSample get(std::size_t index) const;
    const DatasetManifest& manifest() const { return manifest_; }

private:
    DatasetManifest manifest_;
    CropWindow window_;
    std::vector<LoadedSample> cache_;
};

}  // namespace mffseg::data
