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

// Brute-force metric oracles over random small masks.

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "helpers.hpp"
#include "mffseg/metrics.hpp"

namespace mffseg::testing {

inline std::vector<std::pair<int, int>> foreground(const LabelMap& m) {
    std::vector<std::pair<int, int>> pts;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(y, x)) pts.emplace_back(y, x);
    return pts;
}

inline double oracle_dice(const LabelMap& p, const LabelMap& g) {
    double inter = 0, sp = 0, sg = 0;
    for (std::size_t i = 0; i < p.indices.size(); ++i) {
        const bool a = p.indices[i] != 0, b = g.indices[i] != 0;
        inter += a && b;
        sp += a;
        sg += b;
    }
    return sp + sg == 0 ? 1.0 : 2.0 * inter / (sp + sg);
}

inline double directed(const std::vector<std::pair<int, int>>& a, const std::vector<std::pair<int, int>>& b) {
    double worst = 0;
    for (auto [ay, ax] : a) {
        double best = std::numeric_limits<double>::infinity();
        for (auto [by, bx] : b) best = std::min(best, std::hypot(double(ay - by), double(ax - bx)));
        worst = std::max(worst, best);
    }
    return worst;
}

inline std::optional<double> oracle_hausdorff(const LabelMap& p, const LabelMap& g) {
    const auto a = foreground(p), b = foreground(g);
    if (a.empty() || b.empty()) return std::nullopt;
    return std::max(directed(a, b), directed(b, a));
}

inline metrics::ConfusionCounts oracle_counts(const LabelMap& pred, const LabelMap& gt, int cls) {
    metrics::ConfusionCounts c;
    for (std::size_t i = 0; i < pred.indices.size(); ++i) {
        const bool p = pred.indices[i] == cls, g = gt.indices[i] == cls;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

struct MetricOracleSummary {
    int pairs = 0;
    int mismatches = 0;
    int empty_pairs = 0;  // pairs where at least one mask was empty
    double worst = 0.0;
};

// `pairs` random h x w mask pairs with foreground densities drawn from
// {0, 0.05, 0.3, 0.7, 1}; compares every metric with its oracle.
inline MetricOracleSummary compare_metric_oracles(int pairs, std::uint64_t seed, int h = 8, int w = 8) {
    static constexpr double kDensity[] = {0.0, 0.05, 0.3, 0.7, 1.0};
    Rng rng(seed);
    MetricOracleSummary s;
    auto note = [&](double got, double want) {
        const double err = std::abs(got - want);
        s.worst = std::max(s.worst, err);
        if (!(err <= 1e-9)) ++s.mismatches;
    };
    for (int i = 0; i < pairs; ++i) {
        const LabelMap p = random_mask(h, w, kDensity[uniform_int(rng, 0, 4)], rng);
        const LabelMap g = random_mask(h, w, kDensity[uniform_int(rng, 0, 4)], rng);
        ++s.pairs;
        if (foreground(p).empty() || foreground(g).empty()) ++s.empty_pairs;
        note(metrics::dice(p, g), oracle_dice(p, g));
        const auto hd = metrics::hausdorff(p, g), ho = oracle_hausdorff(p, g);
        if (hd.has_value() != ho.has_value()) ++s.mismatches;
        else if (hd) note(*hd, *ho);
        for (int cls : {0, 1}) {
            const auto c = metrics::confusion_counts(p, g, cls), co = oracle_counts(p, g, cls);
            if (!(c == co)) ++s.mismatches;
            const double spec = co.tn + co.fp == 0 ? 1.0 : double(co.tn) / double(co.tn + co.fp);
            const double sens = co.tp + co.fn == 0 ? 1.0 : double(co.tp) / double(co.tp + co.fn);
            note(metrics::specificity(c), spec);
            note(metrics::sensitivity(c), sens);
        }
    }
    return s;
}

}  // namespace mffseg::testing
