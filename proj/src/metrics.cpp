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

#include "mffseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace mffseg::metrics {

namespace {

void check_same_extent(const LabelMap& a, const LabelMap& b, const char* what) {
    MFFSEG_CHECK(a.height == b.height && a.width == b.width, ShapeError,
                 std::string(what) + ": extents differ (" + std::to_string(a.height) + "x" + std::to_string(a.width) +
                     " vs " + std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
}

constexpr double kFar = std::numeric_limits<double>::max() / 4;

// Felzenszwalb-Huttenlocher lower envelope of parabolas; f is replaced by
// its 1-D squared distance transform. Entries >= kFar are empty.
void edt_1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] >= kFar) continue;
        double s = -INFINITY;
        while (k >= 0) {
            const int p = v[k];
            s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -INFINITY : s;
        z[k + 1] = INFINITY;
    }
    if (k < 0) return;
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
    std::copy(d.begin(), d.begin() + n, f.begin());
}

// Squared Euclidean distance from every pixel to the nearest foreground pixel.
std::vector<double> squared_distance_transform(const LabelMap& mask) {
    const int h = mask.height, w = mask.width;
    std::vector<double> grid(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = mask.indices[i] ? 0.0 : kFar;
    const int n = std::max(h, w);
    std::vector<double> d(n), zbuf(n + 1);
    std::vector<int> v(n);
    std::vector<double> line;
    for (int x = 0; x < w; ++x) {
        line.assign(h, 0.0);
        d.resize(h);
        for (int y = 0; y < h; ++y) line[y] = grid[static_cast<std::size_t>(y) * w + x];
        edt_1d(line, d, v, zbuf);
        for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = line[y];
    }
    for (int y = 0; y < h; ++y) {
        line.assign(grid.begin() + static_cast<std::ptrdiff_t>(y) * w, grid.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
        d.resize(w);
        edt_1d(line, d, v, zbuf);
        std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::ptrdiff_t>(y) * w);
    }
    return grid;
}

// max over foreground of `from` of the distance to the nearest foreground of `to`.
double directed(const LabelMap& from, const LabelMap& to) {
    const auto dt = squared_distance_transform(to);
    double worst = 0.0;
    for (std::size_t i = 0; i < dt.size(); ++i)
        if (from.indices[i]) worst = std::max(worst, dt[i]);
    return std::sqrt(worst);
}

bool any(const LabelMap& m) {
    return std::any_of(m.indices.begin(), m.indices.end(), [](std::uint8_t v) { return v != 0; });
}

}  // namespace

ConfusionCounts confusion_counts(const LabelMap& pred, const LabelMap& gt, int cls) {
    check_same_extent(pred, gt, "confusion_counts");
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.indices.size(); ++i) {
        const bool p = pred.indices[i] == cls, g = gt.indices[i] == cls;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

LabelMap class_mask(const LabelMap& labels, int cls) {
    LabelMap m(labels.height, labels.width);
    for (std::size_t i = 0; i < m.indices.size(); ++i) m.indices[i] = labels.indices[i] == cls ? 1 : 0;
    return m;
}

double dice(const LabelMap& pred_mask, const LabelMap& gt_mask) {
    check_same_extent(pred_mask, gt_mask, "dice");
    std::uint64_t inter = 0, p = 0, g = 0;
    for (std::size_t i = 0; i < pred_mask.indices.size(); ++i) {
        const bool a = pred_mask.indices[i] != 0, b = gt_mask.indices[i] != 0;
        inter += a && b;
        p += a;
        g += b;
    }
    if (p + g == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

std::optional<double> hausdorff(const LabelMap& pred_mask, const LabelMap& gt_mask) {
    check_same_extent(pred_mask, gt_mask, "hausdorff");
    if (!any(pred_mask) || !any(gt_mask)) return std::nullopt;
    return std::max(directed(pred_mask, gt_mask), directed(gt_mask, pred_mask));
}

double specificity(const ConfusionCounts& c) {
    const auto den = c.tn + c.fp;
    return den == 0 ? 1.0 : static_cast<double>(c.tn) / static_cast<double>(den);
}

double sensitivity(const ConfusionCounts& c) {
    const auto den = c.tp + c.fn;
    return den == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(den);
}

MetricReport evaluate_multiclass(const LabelMap& pred, const LabelMap& gt, const TaskSpec& task) {
    check_same_extent(pred, gt, "evaluate_multiclass");
    pred.check_range(task.num_classes);
    gt.check_range(task.num_classes);
    MetricReport r;
    r.task = task;
    r.images = 1;
    double fg_sum = 0.0;
    int fg_in_gt = 0;
    bool pred_fg = false;
    for (int k = 0; k < task.num_classes; ++k) {
        ClassMetrics m;
        m.cls = k;
        m.name = task.class_names[k];
        const auto counts = confusion_counts(pred, gt, k);
        const bool in_gt = counts.tp + counts.fn > 0, in_pred = counts.tp + counts.fp > 0;
        if (k > 0 && in_pred) pred_fg = true;
        if (in_gt || in_pred) {
            const auto pm = class_mask(pred, k), gm = class_mask(gt, k);
            m.evaluated = true;
            m.images = 1;
            m.dice = dice(pm, gm);
            m.hausdorff = hausdorff(pm, gm);
            m.hausdorff_images = m.hausdorff ? 1 : 0;
            m.specificity = specificity(counts);
            m.sensitivity = sensitivity(counts);
            if (k > 0 && in_gt) {
                fg_sum += m.dice;
                ++fg_in_gt;
            }
        }
        r.per_class.push_back(std::move(m));
    }
    // No foreground in the ground truth: fall back to the empty-mask dice
    // convention over the whole foreground.
    r.mean_foreground_dice = fg_in_gt > 0 ? fg_sum / fg_in_gt : (pred_fg ? 0.0 : 1.0);
    return r;
}

MetricAccumulator::MetricAccumulator(TaskSpec task)
    : task_(std::move(task)),
      dice_(task_.num_classes, 0.0),
      spec_(task_.num_classes, 0.0),
      sens_(task_.num_classes, 0.0),
      haus_(task_.num_classes, 0.0),
      count_(task_.num_classes, 0),
      haus_count_(task_.num_classes, 0) {}

void MetricAccumulator::add(const LabelMap& pred, const LabelMap& gt) { add(evaluate_multiclass(pred, gt, task_)); }

void MetricAccumulator::add(const MetricReport& r) {
    MFFSEG_CHECK(r.task.num_classes == task_.num_classes, ConfigError, "metric accumulator: task mismatch");
    ++images_;
    headline_sum_ += r.mean_foreground_dice;
    for (const auto& m : r.per_class) {
        if (!m.evaluated) continue;
        dice_[m.cls] += m.dice;
        spec_[m.cls] += m.specificity;
        sens_[m.cls] += m.sensitivity;
        ++count_[m.cls];
        if (m.hausdorff) {
            haus_[m.cls] += *m.hausdorff;
            ++haus_count_[m.cls];
        }
    }
}

MetricReport MetricAccumulator::finish() const {
    MetricReport r;
    r.task = task_;
    r.images = images_;
    r.mean_foreground_dice = images_ ? headline_sum_ / static_cast<double>(images_) : 0.0;
    for (int k = 0; k < task_.num_classes; ++k) {
        ClassMetrics m;
        m.cls = k;
        m.name = task_.class_names[k];
        m.images = count_[k];
        m.hausdorff_images = haus_count_[k];
        m.evaluated = count_[k] > 0;
        if (m.evaluated) {
            const double n = static_cast<double>(count_[k]);
            m.dice = dice_[k] / n;
            m.specificity = spec_[k] / n;
            m.sensitivity = sens_[k] / n;
        }
        if (haus_count_[k] > 0) m.hausdorff = haus_[k] / static_cast<double>(haus_count_[k]);
        r.per_class.push_back(std::move(m));
    }
    return r;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string to_text(const MetricReport& r) {
    std::ostringstream out;
    out << "# task=" << r.task.name() << " branch=" << r.branch << " images=" << r.images << "\n";
    out << "# headline: mean Dice over foreground classes present in the ground truth, averaged over images\n";
    out << "# dice=1 when prediction and ground truth are both empty; hausdorff is symmetric max distance in "
           "pixels, missing (-) when either mask is empty\n";
    out << "# specificity/sensitivity=1 on a zero denominator; classes absent from both are skipped\n";
    out << "class\tname\tdice\thausdorff\tspecificity\tsensitivity\timages\n";
    for (const auto& m : r.per_class) {
        out << m.cls << '\t' << m.name << '\t';
        if (!m.evaluated) {
            out << "-\t-\t-\t-\t0\n";
            continue;
        }
        out << fmt(m.dice) << '\t' << (m.hausdorff ? fmt(*m.hausdorff) : "-") << '\t' << fmt(m.specificity) << '\t'
            << fmt(m.sensitivity) << '\t' << m.images << '\n';
    }
    out << "mean_foreground_dice=" << fmt(r.mean_foreground_dice) << "\n";
    if (r.fps) out << "fps=" << fmt(*r.fps) << "\n";
    return out.str();
}

std::string to_json(const MetricReport& r) {
    nlohmann::json j;
    j["task"] = r.task.name();
    j["branch"] = r.branch;
    j["images"] = r.images;
    j["mean_foreground_dice"] = r.mean_foreground_dice;
    j["fps"] = r.fps ? nlohmann::json(*r.fps) : nlohmann::json(nullptr);
    auto rows = nlohmann::json::array();
    for (const auto& m : r.per_class) {
        nlohmann::json row;
        row["class"] = m.cls;
        row["name"] = m.name;
        row["evaluated"] = m.evaluated;
        if (m.evaluated) {
            row["dice"] = m.dice;
            row["specificity"] = m.specificity;
            row["sensitivity"] = m.sensitivity;
        }
        row["hausdorff"] = m.hausdorff ? nlohmann::json(*m.hausdorff) : nlohmann::json(nullptr);
        rows.push_back(std::move(row));
    }
    j["per_class"] = std::move(rows);
    return j.dump();
}

}  // namespace mffseg::metrics
