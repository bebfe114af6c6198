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
#include <optional>
#include <string>
#include <vector>

#include "mffseg/types.hpp"

namespace mffseg::metrics {

// One-vs-rest pixel counts for a single class.
struct ConfusionCounts {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::uint64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

ConfusionCounts confusion_counts(const LabelMap& pred, const LabelMap& gt, int cls);

// Masks are label maps where any non-zero value is foreground.
LabelMap class_mask(const LabelMap& labels, int cls);

// 2|P and G| / (|P| + |G|); 1 when both masks are empty.
double dice(const LabelMap& pred_mask, const LabelMap& gt_mask);

// Symmetric Hausdorff distance in pixels between the foreground pixel sets.
// Empty when either mask has no foreground.
std::optional<double> hausdorff(const LabelMap& pred_mask, const LabelMap& gt_mask);

// tn / (tn + fp) and tp / (tp + fn); 1 when the denominator is zero.
double specificity(const ConfusionCounts& c);
double sensitivity(const ConfusionCounts& c);

struct ClassMetrics {
    int cls = 0;
    std::string name;
    // False when the class is absent from both prediction and ground truth;
    // the remaining fields are then not meaningful and are not aggregated.
    bool evaluated = false;
    double dice = 0.0;
    std::optional<double> hausdorff;
    double specificity = 0.0;
    double sensitivity = 0.0;
    // Images contributing to each mean (1 or 0 for single images).
    std::size_t images = 0;
    std::size_t hausdorff_images = 0;
};

struct MetricReport {
    TaskSpec task;
    std::string branch = "main";
    std::vector<ClassMetrics> per_class;
    // Headline: mean Dice over foreground classes present in the ground truth.
    double mean_foreground_dice = 0.0;
    std::size_t images = 0;
    std::optional<double> fps;
};

MetricReport evaluate_multiclass(const LabelMap& pred, const LabelMap& gt, const TaskSpec& task);

// Dataset-level aggregation: every number is the mean over images of the
// per-image value, in insertion order.
class MetricAccumulator {
public:
    explicit MetricAccumulator(TaskSpec task);
    void add(const LabelMap& pred, const LabelMap& gt);
    void add(const MetricReport& image_report);
    MetricReport finish() const;

private:
    TaskSpec task_;
    std::size_t images_ = 0;
    double headline_sum_ = 0.0;
    std::vector<double> dice_, spec_, sens_, haus_;
    std::vector<std::size_t> count_, haus_count_;
};

// Structured text: header with conventions, one row per class, headline.
std::string to_text(const MetricReport& report);
// Single-line machine-readable summary.
std::string to_json(const MetricReport& report);

}  // namespace mffseg::metrics
