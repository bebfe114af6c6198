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

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "mffseg/data.hpp"
#include "mffseg/png_io.hpp"
#include "mffseg/synthetic.hpp"

using namespace mffseg;
using namespace mffseg::data;
namespace fs = std::filesystem;

namespace {

Frame random_frame(int h, int w, std::uint64_t seed) {
    Frame f(h, w);
    Rng rng(seed);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
    return f;
}

InstrumentMask filled_mask(int category, int h, int w, std::uint8_t code) {
    return {category, LabelMap(h, w, code)};
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("crop_canvas keeps the configured window of a raw frame") {
    const Frame raw = random_frame(kRawHeight, kRawWidth, 3);
    const CropWindow win;
    const Frame out = crop_canvas(raw, win);
    REQUIRE(out.height == 1024);
    REQUIRE(out.width == 1280);
    bool same = true;
    for (int y = 0; y < out.height && same; ++y)
        for (int x = 0; x < out.width && same; ++x)
            for (int c = 0; c < 3; ++c) same = same && out.at(y, x, c) == raw.at(y + 28, x + 320, c);
    CHECK(same);
}

TEST_CASE("crop_canvas preserves a uniform gray frame and passes cropped frames through") {
    const Frame gray(kRawHeight, kRawWidth, 128);
    const Frame out = crop_canvas(gray);
    CHECK(std::all_of(out.pixels.begin(), out.pixels.end(), [](auto v) { return v == 128; }));
    const Frame again = crop_canvas(out);
    CHECK(again == out);
}

TEST_CASE("crop_canvas rejects other extents") {
    CHECK_THROWS_AS(crop_canvas(Frame(100, 200)), ShapeError);
    CHECK_THROWS_AS(crop_canvas(LabelMap(1080, 1000)), ShapeError);
    const LabelMap raw(kRawHeight, kRawWidth, 7);
    CHECK(crop_canvas(raw).height == 1024);
}

TEST_CASE("instrument folders map to category codes") {
    CHECK(instrument_category("Left_Bipolar_Forceps_labels") == 1);
    CHECK(instrument_category("Maryland_Bipolar_Forceps_labels") == 1);
    CHECK(instrument_category("Right_Prograsp_Forceps_labels") == 2);
    CHECK(instrument_category("Left_Large_Needle_Driver_labels") == 3);
    CHECK(instrument_category("Vessel_Sealer_labels") == 4);
    CHECK(instrument_category("Grasping_Retractor_labels") == 5);
    CHECK(instrument_category("Right_Monopolar_Curved_Scissors_labels") == 6);
    CHECK(instrument_category("Other_labels") == 7);
    CHECK_THROWS_AS(instrument_category("Left_Stapler_labels"), DataError);
}

TEST_CASE("encode_labels: binary marks any instrument pixel") {
    LabelMap codes(2, 3);
    codes.at(0, 1) = 10;
    codes.at(1, 2) = 30;
    const std::vector<InstrumentMask> masks{{4, codes}};
    const LabelMap out = encode_labels(masks, TaskSpec::binary());
    const LabelMap want = [] {
        LabelMap m(2, 3);
        m.at(0, 1) = 1;
        m.at(1, 2) = 1;
        return m;
    }();
    CHECK(out == want);
}

TEST_CASE("encode_labels: background only gives zeros for every task") {
    const std::vector<InstrumentMask> masks{filled_mask(2, 4, 4, 0), filled_mask(5, 4, 4, 0)};
    for (const auto& task : {TaskSpec::binary(), TaskSpec::parts(), TaskSpec::instruments()})
        CHECK(encode_labels(masks, task) == LabelMap(4, 4));
}

TEST_CASE("encode_labels: parts map raw codes and probes count as shaft") {
    LabelMap codes(1, 5);
    const std::uint8_t raw[5] = {0, 10, 20, 30, 40};
    std::copy(raw, raw + 5, codes.indices.begin());
    const auto out = encode_labels(std::vector<InstrumentMask>{{3, codes}}, TaskSpec::parts());
    CHECK(out.indices == std::vector<std::uint8_t>{0, 1, 2, 3, 1});
}

TEST_CASE("encode_labels: the lower category wins every two-instrument overlap") {
    for (int a = 1; a <= 7; ++a) {
        for (int b = 1; b <= 7; ++b) {
            if (a == b) continue;
            for (std::uint8_t ca : {10, 20, 30}) {
                for (std::uint8_t cb : {10, 20, 30}) {
                    const std::vector<InstrumentMask> masks{filled_mask(a, 1, 1, ca), filled_mask(b, 1, 1, cb)};
                    const int winner = std::min(a, b);
                    const std::uint8_t winner_code = a < b ? ca : cb;
                    CHECK(encode_labels(masks, TaskSpec::instruments()).at(0, 0) == winner);
                    CHECK(encode_labels(masks, TaskSpec::parts()).at(0, 0) == winner_code / 10);
                    CHECK(encode_labels(masks, TaskSpec::binary()).at(0, 0) == 1);
                }
            }
        }
    }
}

TEST_CASE("encode_labels rejects unknown codes and mismatched extents") {
    try {
        encode_labels(std::vector<InstrumentMask>{filled_mask(1, 2, 2, 17)}, TaskSpec::binary());
        FAIL("expected rejection");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("17") != std::string::npos);
        CHECK(msg.find("10, 20, 30, 40") != std::string::npos);
    }
    const std::vector<InstrumentMask> bad{filled_mask(1, 2, 2, 10), filled_mask(2, 3, 2, 10)};
    CHECK_THROWS_AS(encode_labels(bad, TaskSpec::binary()), ShapeError);
}

TEST_CASE("normalize subtracts channel means from unit-scale pixels") {
    SUBCASE("constant image at the means maps to zero") {
        Frame f(3, 3);
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) {
                f.at(y, x, 0) = 51;
                f.at(y, x, 1) = 102;
                f.at(y, x, 2) = 204;
            }
        const auto out = normalize(f, {{51 / 255.0, 102 / 255.0, 204 / 255.0}});
        for (float v : out.planes) CHECK(std::abs(v) < 1e-7);
    }
    SUBCASE("zero means give pixels / 255") {
        const Frame f = random_frame(4, 5, 9);
        const auto out = normalize(f, {});
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 20; ++i)
                CHECK(out.planes[c * 20 + i] == doctest::Approx(f.pixels[i * 3 + c] / 255.0).epsilon(1e-7));
    }
    SUBCASE("random 4x4 image matches the elementwise oracle") {
        const Frame f = random_frame(4, 4, 11);
        const ChannelMeans m{{0.5, 0.4, 0.3}};
        const auto out = normalize(f, m);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                for (int c = 0; c < 3; ++c) {
                    const double want = f.at(y, x, c) / 255.0 - m.rgb[c];
                    CHECK(std::abs(out.planes[c * 16 + y * 4 + x] - want) < 1e-6);
                }
    }
}

TEST_CASE("resolve_channel_means needs means or a training split") {
    CHECK_THROWS_AS(resolve_channel_means(std::nullopt, nullptr), DataError);
    DatasetManifest empty;
    CHECK_THROWS_AS(resolve_channel_means(std::nullopt, &empty), DataError);
    const ChannelMeans given{{0.1, 0.2, 0.3}};
    CHECK(resolve_channel_means(given, nullptr).rgb == given.rgb);
}

TEST_CASE("flips are involutions and follow index arithmetic") {
    const Frame f = random_frame(8, 8, 21);
    const LabelMap l = testing::random_labels(8, 8, 4, 22);
    Frame hf = f;
    LabelMap hl = l;
    hflip(hf);
    hflip(hl);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            CHECK(hl.at(r, c) == l.at(r, 7 - c));
            CHECK(hf.at(r, c, 1) == f.at(r, 7 - c, 1));
        }
    Frame vf = f;
    LabelMap vl = l;
    vflip(vf);
    vflip(vl);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK(vl.at(r, c) == l.at(7 - r, c));
    hflip(hf);
    hflip(hl);
    vflip(vf);
    vflip(vl);
    CHECK(hf == f);
    CHECK(hl == l);
    CHECK(vf == f);
    CHECK(vl == l);
}

TEST_CASE("augment is seed-driven and applies the same flips to frame and label") {
    const Frame f = random_frame(6, 10, 5);
    const LabelMap l = testing::random_labels(6, 10, 3, 6);
    int identity_seeds = 0, hflips = 0, vflips = 0;
    const int trials = 2000;
    for (std::uint64_t seed = 0; seed < trials; ++seed) {
        const auto choice = augment_choice(seed);
        hflips += choice.hflip;
        vflips += choice.vflip;
        if (seed >= 64) continue;
        auto [af, al] = augment(f, l, seed);
        Frame ef = f;
        LabelMap el = l;
        if (choice.hflip) {
            hflip(ef);
            hflip(el);
        }
        if (choice.vflip) {
            vflip(ef);
            vflip(el);
        }
        CHECK(af == ef);
        CHECK(al == el);
        if (!choice.hflip && !choice.vflip) {
            CHECK(af == f);
            ++identity_seeds;
        }
        const auto again = augment(f, l, seed);
        CHECK(again.first == af);
    }
    CHECK(identity_seeds > 0);
    CHECK(std::abs(hflips / double(trials) - 0.5) < 0.05);
    CHECK(std::abs(vflips / double(trials) - 0.5) < 0.05);
}

TEST_CASE("opt-in augmentations keep frame and label aligned") {
    const auto s = render_synthetic(64, 96, TaskSpec::binary(), 4);
    AugmentOptions opts;
    opts.blur = opts.brightness = opts.skew = true;
    auto [f, l] = augment(s.frame, s.label, 99, opts);
    CHECK(f.height == 64);
    CHECK(l.width == 96);
    std::set<int> values(l.indices.begin(), l.indices.end());
    CHECK(values.size() <= 2);
    CHECK_THROWS_AS(augment(Frame(4, 4), LabelMap(4, 5), 1), ShapeError);
}

TEST_CASE("downsample_labels takes every factor-th pixel") {
    const LabelMap l = testing::random_labels(8, 12, 5, 1);
    CHECK(downsample_labels(l, 1) == l);
    CHECK(downsample_labels(LabelMap(16, 32, 3), 16) == LabelMap(1, 2, 3));
    LabelMap board(4, 4);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) board.at(r, c) = static_cast<std::uint8_t>((r + c) % 2 + 10 * r + c);
    const auto d = downsample_labels(board, 2);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) CHECK(d.at(r, c) == board.at(2 * r, 2 * c));
    CHECK_THROWS_AS(downsample_labels(LabelMap(6, 8), 4), ShapeError);
    CHECK_THROWS_AS(downsample_labels(LabelMap(6, 6), 3), ShapeError);
}

TEST_CASE("split_train_test partitions by sequence") {
    DatasetManifest m;
    for (int s = 1; s <= 8; ++s)
        for (int i = 0; i < 3; ++i)
            m.samples.push_back({"seq" + std::to_string(s) + "/f" + std::to_string(i), {"l"}, s});
    auto [train, test] = split_train_test(m);
    CHECK(train.samples.size() == 18);
    CHECK(test.samples.size() == 6);
    std::set<std::string> a, b, all;
    for (const auto& s : train.samples) {
        a.insert(s.frame);
        CHECK(s.sequence <= 6);
    }
    for (const auto& s : test.samples) {
        b.insert(s.frame);
        CHECK(s.sequence >= 7);
    }
    for (const auto& s : m.samples) all.insert(s.frame);
    std::vector<std::string> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    CHECK(inter.empty());
    a.insert(b.begin(), b.end());
    CHECK(a == all);
}

TEST_CASE("split_train_test: single synthetic sequence is all train; real data needs all sequences") {
    DatasetManifest m;
    m.samples = {{"a", {"x"}, 1}, {"b", {"x"}, 1}};
    auto [train, test] = split_train_test(m);
    CHECK(train.samples.size() == 2);
    CHECK(test.samples.empty());
    m.source = "endovis";
    try {
        split_train_test(m);
        FAIL("expected rejection");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("sequence 2") != std::string::npos);
    }
}

TEST_CASE("synthetic renderer labels match encode_labels of its raw masks") {
    for (const auto& task : {TaskSpec::binary(), TaskSpec::parts(), TaskSpec::instruments()}) {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const auto s = render_synthetic(64, 96, task, seed);
            CHECK(encode_labels(s.masks, task) == s.label);
            for (std::size_t i = 0; i < s.masks.size(); ++i)
                CHECK(instrument_category(s.folders[i]) == s.masks[i].category);
        }
    }
}

TEST_CASE("synthetic parts labels stay within the part codes") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const auto s = render_synthetic(96, 128, TaskSpec::parts(), seed);
        std::set<int> values(s.label.indices.begin(), s.label.indices.end());
        for (int v : values) CHECK(v <= 3);
        CHECK(values.count(1));
    }
}

TEST_CASE("generate_synthetic is deterministic and validates its size") {
    const auto a = testing::scratch_dir("synth_a"), b = testing::scratch_dir("synth_b");
    const auto ma = generate_synthetic(a, 5, 64, 96, TaskSpec::binary(), 42, 2);
    const auto mb = generate_synthetic(b, 5, 64, 96, TaskSpec::binary(), 42, 2);
    REQUIRE(ma.samples.size() == 5);
    REQUIRE(ma.samples == mb.samples);
    for (const auto& s : ma.samples) {
        CHECK(file_bytes(a / s.frame) == file_bytes(b / s.frame));
        for (const auto& l : s.labels) CHECK(file_bytes(a / l) == file_bytes(b / l));
    }
    // Re-running in place gives the same content.
    const auto again = generate_synthetic(a, 5, 64, 96, TaskSpec::binary(), 42, 2);
    CHECK(again.samples == ma.samples);
    CHECK(file_bytes(a / ma.samples[0].frame) == file_bytes(b / ma.samples[0].frame));

    CHECK(generate_synthetic(testing::scratch_dir("synth_empty"), 0, 64, 64, TaskSpec::binary(), 1).samples.empty());
    CHECK_THROWS_AS(generate_synthetic(testing::scratch_dir("synth_bad"), 1, 60, 64, TaskSpec::binary(), 1), ShapeError);
    CHECK_THROWS_AS(render_synthetic(64, 100, TaskSpec::binary(), 1), ShapeError);
}

TEST_CASE("loaded synthetic samples reproduce the rendered labels for every task") {
    const auto dir = testing::scratch_dir("synth_load");
    const auto m = generate_synthetic(dir, 3, 64, 64, TaskSpec::parts(), 8, 1);
    for (const auto& task : {TaskSpec::binary(), TaskSpec::parts(), TaskSpec::instruments()}) {
        DatasetManifest mt = m;
        mt.task = task;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto rendered = render_synthetic(64, 64, task, derive_seed(8, 0, i));
            const auto loaded = load_sample(mt, i);
            CHECK(loaded.label == rendered.label);
            CHECK(loaded.frame == rendered.frame);
        }
    }
}

TEST_CASE("manifest and means files round-trip") {
    const auto dir = testing::scratch_dir("manifest_io");
    DatasetManifest m;
    m.root = ".";
    m.source = "endovis";
    m.task = TaskSpec::instruments();
    m.split = Split::Test;
    m.samples = {{"instrument_dataset_7/left_frames/frame000.png",
                  {"instrument_dataset_7/ground_truth/A_labels/frame000.png",
                   "instrument_dataset_7/ground_truth/B_labels/frame000.png"},
                  7}};
    write_manifest(dir / "manifest.txt", m);
    const auto back = read_manifest(dir / "manifest.txt");
    CHECK(back.samples == m.samples);
    CHECK(back.source == "endovis");
    CHECK(back.task.name() == "instruments");
    CHECK(back.split == Split::Test);
    CHECK(fs::equivalent(back.root, dir));

    const ChannelMeans means{{0.123456789012345678, 1.0 / 3.0, 0.7}};
    write_means(dir / "means.txt", means);
    CHECK(read_means(dir / "means.txt").rgb == means.rgb);

    std::ofstream(dir / "bad.txt") << "r=0.1\ng=0.2\n";
    CHECK_THROWS_AS(read_means(dir / "bad.txt"), DataError);
    std::ofstream(dir / "bad_manifest.txt") << "a\tb\t1\n";
    CHECK_THROWS_AS(read_manifest(dir / "bad_manifest.txt"), DataError);
}

TEST_CASE("normalized training frames have zero channel means") {
    const auto dir = testing::scratch_dir("means");
    const auto m = generate_synthetic(dir, 4, 64, 96, TaskSpec::binary(), 3, 1);
    const auto means = compute_channel_means(m);
    std::array<double, 3> sum{};
    double count = 0;
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
        const auto nf = normalize(load_sample(m, i).frame, means);
        const std::size_t plane = nf.planes.size() / 3;
        for (int c = 0; c < 3; ++c)
            for (std::size_t p = 0; p < plane; ++p) sum[c] += nf.planes[c * plane + p];
        count += plane;
    }
    for (int c = 0; c < 3; ++c) CHECK(std::abs(sum[c] / count) < 1e-3);
}

TEST_CASE("scan_dataset reads the challenge layout and splits it 1350 / 450") {
    const auto root = testing::scratch_dir("layout");
    const LabelMap tiny_gt(1, 1, 10);
    const Frame tiny_frame(1, 1, 90);
    for (int seq = 1; seq <= 8; ++seq) {
        const fs::path dir = root / ("instrument_dataset_" + std::to_string(seq));
        fs::create_directories(dir / "left_frames");
        fs::create_directories(dir / "ground_truth" / "Left_Prograsp_Forceps_labels");
        for (int i = 0; i < 225; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "frame%03d.png", i);
            io::write_frame(dir / "left_frames" / name, tiny_frame);
            io::write_gray(dir / "ground_truth" / "Left_Prograsp_Forceps_labels" / name, tiny_gt);
        }
    }
    const auto m = scan_dataset(root, TaskSpec::binary(), "endovis");
    CHECK(m.samples.size() == 1800);
    auto [train, test] = split_train_test(m);
    CHECK(train.samples.size() == 1350);
    CHECK(test.samples.size() == 450);
    CHECK(load_sample(m, 0).label.at(0, 0) == 1);

    fs::remove_all(root / "instrument_dataset_3");
    try {
        split_train_test(scan_dataset(root, TaskSpec::binary(), "endovis"));
        FAIL("expected rejection");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("sequence 3") != std::string::npos);
    }
}

TEST_CASE("Dataset caching returns the same samples as direct loading") {
    const auto dir = testing::scratch_dir("dataset_cache");
    const auto m = generate_synthetic(dir, 3, 64, 64, TaskSpec::binary(), 5, 1);
    const Dataset cached(m, true), lazy(m, false);
    REQUIRE(cached.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(cached.get(i).label == lazy.get(i).label);
        CHECK(cached.get(i).frame == lazy.get(i).frame);
    }
}

}  // TEST_SUITE
