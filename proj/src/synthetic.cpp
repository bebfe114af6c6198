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

#include "mffseg/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "mffseg/png_io.hpp"
#include "mffseg/rng.hpp"

namespace mffseg::data {

namespace fs = std::filesystem;

namespace {

struct Vec2 {
    double x = 0.0, y = 0.0;
};

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

bool in_triangle(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
    const double d1 = cross(b - a, p - a), d2 = cross(c - b, p - b), d3 = cross(a - c, p - c);
    const bool neg = d1 < 0 || d2 < 0 || d3 < 0, pos = d1 > 0 || d2 > 0 || d3 > 0;
    return !(neg && pos);
}

struct Instrument {
    int category = 1;
    Vec2 tip, dir, perp;  // dir points from the tip out towards the frame edge
    double half_width = 0.0;
    double wrist_a = 0.0, wrist_b = 0.0;
    std::array<std::array<Vec2, 3>, 2> jaws{};
    double shade = 0.0;

    // Raw part code at a pixel centre, painted shaft -> wrist -> claspers.
    std::uint8_t code(Vec2 p) const {
        std::uint8_t c = 0;
        const Vec2 r = p - tip;
        const double along = dot(r, dir), across = dot(r, perp);
        if (along >= 0.0 && std::abs(across) <= half_width) c = 10;
        if ((along * along) / (wrist_a * wrist_a) + (across * across) / (wrist_b * wrist_b) <= 1.0) c = 20;
        for (const auto& j : jaws)
            if (in_triangle(p, j[0], j[1], j[2])) c = 30;
        return c;
    }
};

Instrument make_instrument(Rng& rng, int category, int h, int w) {
    Instrument ins;
    ins.category = category;
    const double s = std::min(h, w);
    ins.tip = {uniform(rng, 0.3, 0.7) * w, uniform(rng, 0.3, 0.7) * h};
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    ins.dir = {std::cos(theta), std::sin(theta)};
    ins.perp = {-ins.dir.y, ins.dir.x};
    ins.half_width = uniform(rng, 0.045, 0.07) * s;
    ins.wrist_a = 1.3 * ins.half_width;
    ins.wrist_b = 1.15 * ins.half_width;
    const double open = uniform(rng, 0.3, 0.9);
    const Vec2 base = ins.tip - 0.8 * ins.wrist_a * ins.dir;
    const double reach = ins.wrist_a + uniform(rng, 1.8, 2.6) * ins.half_width;
    for (int side = 0; side < 2; ++side) {
        const double sg = side == 0 ? 1.0 : -1.0;
        ins.jaws[side] = {base, base + (sg * 0.9 * ins.half_width) * ins.perp,
                          ins.tip - reach * ins.dir + (sg * open * ins.half_width) * ins.perp};
    }
    ins.shade = uniform(rng, -20.0, 20.0);
    return ins;
}

int task_value(const TaskSpec& task, int category, std::uint8_t code) {
    switch (task.kind) {
        case TaskKind::Binary: return 1;
        case TaskKind::Parts: return code / 10;
        case TaskKind::Instruments: return category;
    }
    return 0;
}

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

SyntheticSample render_synthetic(int height, int width, const TaskSpec& task, std::uint64_t seed) {
    MFFSEG_CHECK(height > 0 && width > 0 && height % 32 == 0 && width % 32 == 0, ShapeError,
                 "synthetic size " + std::to_string(height) + "x" + std::to_string(width) +
                     " must be positive multiples of 32");
    Rng rng(seed);
    SyntheticSample out;
    out.frame = Frame(height, width);
    out.label = LabelMap(height, width);

    // Background: tissue tone with a few low-frequency waves and pixel noise.
    const std::array<double, 3> base{uniform(rng, 160, 200), uniform(rng, 60, 90), uniform(rng, 55, 85)};
    struct Wave {
        double fx, fy, phase, amp;
    };
    std::array<Wave, 3> waves{};
    for (auto& wv : waves)
        wv = {uniform(rng, 0.5, 4.0) / width, uniform(rng, 0.5, 4.0) / height, uniform(rng, 0, 2 * std::numbers::pi),
              uniform(rng, 6, 16)};

    const int count = 1 + (bernoulli(rng, 0.5) ? 1 : 0);
    std::array<int, 7> cats{1, 2, 3, 4, 5, 6, 7};
    for (int i = 6; i > 0; --i) std::swap(cats[i], cats[uniform_int(rng, 0, i)]);
    std::vector<Instrument> instruments;
    for (int i = 0; i < count; ++i) instruments.push_back(make_instrument(rng, cats[i], height, width));
    // Paint the highest category first so the lowest one ends on top.
    std::sort(instruments.begin(), instruments.end(),
              [](const Instrument& a, const Instrument& b) { return a.category > b.category; });

    const TaskSpec inst = TaskSpec::instruments();
    for (const auto& ins : instruments) {
        out.masks.push_back({ins.category, LabelMap(height, width)});
        out.folders.push_back("Left_" + inst.class_names[ins.category] + "_labels");
    }

    const std::array<double, 4> part_gray{0.0, 85.0, 150.0, 205.0};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double tex = 0.0;
            for (const auto& wv : waves) tex += wv.amp * std::sin(2 * std::numbers::pi * (wv.fx * x + wv.fy * y) + wv.phase);
            std::array<double, 3> rgb{base[0] + tex, base[1] + 0.6 * tex, base[2] + 0.5 * tex};
            const Vec2 p{x + 0.5, y + 0.5};
            for (std::size_t i = 0; i < instruments.size(); ++i) {
                const auto code = instruments[i].code(p);
                out.masks[i].codes.at(y, x) = code;
                if (code == 0) continue;
                const double g = part_gray[code / 10] + instruments[i].shade;
                rgb = {g, g, g + 8.0};
                out.label.at(y, x) = static_cast<std::uint8_t>(task_value(task, instruments[i].category, code));
            }
            for (int c = 0; c < 3; ++c) out.frame.at(y, x, c) = clamp8(rgb[c] + uniform(rng, -8.0, 8.0));
        }
    }
    return out;
}

DatasetManifest generate_synthetic(const fs::path& out_dir, int n, int height, int width, const TaskSpec& task,
                                   std::uint64_t seed, int sequences) {
    MFFSEG_CHECK(n >= 0, ConfigError, "synthetic: negative sample count");
    MFFSEG_CHECK(sequences >= 1, ConfigError, "synthetic: need at least one sequence");
    MFFSEG_CHECK(height > 0 && width > 0 && height % 32 == 0 && width % 32 == 0, ShapeError,
                 "synthetic size " + std::to_string(height) + "x" + std::to_string(width) +
                     " must be positive multiples of 32");
    fs::create_directories(out_dir);
    for (const auto& e : fs::directory_iterator(out_dir))
        if (e.is_directory() && e.path().filename().string().starts_with("instrument_dataset_")) fs::remove_all(e.path());

    std::vector<int> per_sequence(sequences + 1, 0);
    for (int i = 0; i < n; ++i) {
        const int seq = i % sequences + 1;
        const int local = per_sequence[seq]++;
        const auto sample = render_synthetic(height, width, task, derive_seed(seed, 0, static_cast<std::uint64_t>(i)));
        const fs::path dir = out_dir / ("instrument_dataset_" + std::to_string(seq));
        char name[32];
        std::snprintf(name, sizeof name, "frame%03d.png", local);
        fs::create_directories(dir / "left_frames");
        io::write_frame(dir / "left_frames" / name, sample.frame);
        for (std::size_t m = 0; m < sample.masks.size(); ++m) {
            const fs::path gt = dir / "ground_truth" / sample.folders[m];
            fs::create_directories(gt);
            io::write_gray(gt / name, sample.masks[m].codes);
        }
    }
    return scan_dataset(out_dir, task, "synthetic");
}

}  // namespace mffseg::data
