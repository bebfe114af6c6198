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

#include "mffseg/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mffseg/png_io.hpp"
#include "mffseg/rng.hpp"

namespace mffseg::data {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ crop

namespace {

void check_window(int h, int w, const CropWindow& win, const std::string& what) {
    MFFSEG_CHECK(win.top >= 0 && win.left >= 0 && win.top + win.height <= kRawHeight &&
                     win.left + win.width <= kRawWidth,
                 ConfigError, "crop window does not fit inside a 1080x1920 frame");
    MFFSEG_CHECK((h == kRawHeight && w == kRawWidth) || (h == win.height && w == win.width), ShapeError,
                 "crop_canvas: " + what + " is " + std::to_string(h) + "x" + std::to_string(w) + ", expected " +
                     std::to_string(kRawHeight) + "x" + std::to_string(kRawWidth));
}

}  // namespace

Frame crop_canvas(const Frame& frame, const CropWindow& win) {
    check_window(frame.height, frame.width, win, "frame");
    if (frame.height == win.height && frame.width == win.width) return frame;
    Frame out(win.height, win.width);
    for (int y = 0; y < win.height; ++y) {
        const auto* src = frame.pixels.data() + (static_cast<std::size_t>(y + win.top) * frame.width + win.left) * 3;
        std::copy(src, src + static_cast<std::size_t>(win.width) * 3,
                  out.pixels.data() + static_cast<std::size_t>(y) * win.width * 3);
    }
    return out;
}

LabelMap crop_canvas(const LabelMap& map, const CropWindow& win) {
    check_window(map.height, map.width, win, "label image");
    if (map.height == win.height && map.width == win.width) return map;
    LabelMap out(win.height, win.width);
    for (int y = 0; y < win.height; ++y) {
        const auto* src = map.indices.data() + static_cast<std::size_t>(y + win.top) * map.width + win.left;
        std::copy(src, src + win.width, out.indices.data() + static_cast<std::size_t>(y) * win.width);
    }
    return out;
}

// ---------------------------------------------------------------- labels

int instrument_category(std::string_view folder) {
    const TaskSpec inst = TaskSpec::instruments();
    for (int k = 1; k < inst.num_classes; ++k) {
        if (folder.find(inst.class_names[k]) != std::string_view::npos) return k;
    }
    std::string known;
    for (int k = 1; k < inst.num_classes; ++k) known += (k > 1 ? ", " : "") + inst.class_names[k];
    throw DataError("unknown instrument folder '" + std::string(folder) + "' (known: " + known + ")");
}

namespace {

int part_class(std::uint8_t code) {
    switch (code) {
        case 10: return 1;
        case 20: return 2;
        case 30: return 3;
        case 40: return 1;  // probe bodies count as shaft
        default: return -1;
    }
}

}  // namespace

LabelMap encode_labels(std::span<const InstrumentMask> instruments, const TaskSpec& task) {
    MFFSEG_CHECK(!instruments.empty(), DataError, "encode_labels: no ground-truth images supplied");
    const int h = instruments[0].codes.height, w = instruments[0].codes.width;
    for (const auto& m : instruments) {
        MFFSEG_CHECK(m.codes.height == h && m.codes.width == w, ShapeError,
                     "encode_labels: ground-truth images differ in size (" + std::to_string(m.codes.height) + "x" +
                         std::to_string(m.codes.width) + " vs " + std::to_string(h) + "x" + std::to_string(w) + ")");
        MFFSEG_CHECK(m.category >= 1 && m.category <= 7, DataError,
                     "encode_labels: instrument category " + std::to_string(m.category) + " outside 1..7");
    }
    // Priority order: ascending category, stable on input order.
    std::vector<std::size_t> order(instruments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return instruments[a].category < instruments[b].category; });

    LabelMap out(h, w);
    for (std::size_t p = 0; p < out.indices.size(); ++p) {
        for (std::size_t i : order) {
            const std::uint8_t code = instruments[i].codes.indices[p];
            if (code == 0) continue;
            const int part = part_class(code);
            MFFSEG_CHECK(part > 0, DataError,
                         "encode_labels: unknown part code " + std::to_string(code) + " (known: 0, 10, 20, 30, 40)");
            switch (task.kind) {
                case TaskKind::Binary: out.indices[p] = 1; break;
                case TaskKind::Parts: out.indices[p] = static_cast<std::uint8_t>(part); break;
                case TaskKind::Instruments: out.indices[p] = static_cast<std::uint8_t>(instruments[i].category); break;
            }
            break;
        }
    }
    // Codes in lower-priority masks are validated too, even when occluded.
    for (const auto& m : instruments) {
        for (auto code : m.codes.indices) {
            MFFSEG_CHECK(code == 0 || part_class(code) > 0, DataError,
                         "encode_labels: unknown part code " + std::to_string(code) + " (known: 0, 10, 20, 30, 40)");
        }
    }
    return out;
}

// ------------------------------------------------------------ normalize

NormalizedFrame normalize(const Frame& frame, const ChannelMeans& means) {
    NormalizedFrame out{frame.height, frame.width, {}};
    const std::size_t plane = static_cast<std::size_t>(frame.height) * frame.width;
    out.planes.resize(plane * 3);
    for (int c = 0; c < 3; ++c) {
        const float m = static_cast<float>(means.rgb[c]);
        float* dst = out.planes.data() + c * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = static_cast<float>(frame.pixels[3 * i + c]) / 255.0f - m;
    }
    return out;
}

// -------------------------------------------------------------- augment

void hflip(Frame& f) {
    for (int y = 0; y < f.height; ++y) {
        for (int x = 0; x < f.width / 2; ++x) {
            for (int c = 0; c < 3; ++c) std::swap(f.at(y, x, c), f.at(y, f.width - 1 - x, c));
        }
    }
}

void vflip(Frame& f) {
    const std::size_t row = static_cast<std::size_t>(f.width) * 3;
    for (int y = 0; y < f.height / 2; ++y)
        std::swap_ranges(f.pixels.begin() + y * row, f.pixels.begin() + (y + 1) * row,
                         f.pixels.begin() + (f.height - 1 - y) * row);
}

void hflip(LabelMap& m) {
    for (int y = 0; y < m.height; ++y) {
        auto begin = m.indices.begin() + static_cast<std::size_t>(y) * m.width;
        std::reverse(begin, begin + m.width);
    }
}

void vflip(LabelMap& m) {
    const std::size_t row = m.width;
    for (int y = 0; y < m.height / 2; ++y)
        std::swap_ranges(m.indices.begin() + y * row, m.indices.begin() + (y + 1) * row,
                         m.indices.begin() + (m.height - 1 - y) * row);
}

namespace {

void gaussian_blur(Frame& f, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) total += kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (auto& k : kernel) k /= total;
    std::vector<double> tmp(f.pixels.size());
    auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi - 1); };
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * f.at(y, clampi(x + i, f.width), c);
                tmp[(static_cast<std::size_t>(y) * f.width + x) * 3 + c] = acc;
            }
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += kernel[i + radius] * tmp[(static_cast<std::size_t>(clampi(y + i, f.height)) * f.width + x) * 3 + c];
                f.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
            }
}

void shift_brightness(Frame& f, double delta) {
    const double d = delta * 255.0;
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(std::clamp(std::lround(p + d), 0L, 255L));
}

// Horizontal shear about the centre row, nearest-neighbour; uncovered pixels
// become black / background.
void shear(Frame& f, LabelMap& m, double s) {
    Frame fo(f.height, f.width);
    LabelMap mo(m.height, m.width);
    const double cy = 0.5 * (f.height - 1);
    for (int y = 0; y < f.height; ++y) {
        const double shift = s * (y - cy);
        for (int x = 0; x < f.width; ++x) {
            const long sx = std::lround(x - shift);
            if (sx < 0 || sx >= f.width) continue;
            for (int c = 0; c < 3; ++c) fo.at(y, x, c) = f.at(y, static_cast<int>(sx), c);
            mo.at(y, x) = m.at(y, static_cast<int>(sx));
        }
    }
    f = std::move(fo);
    m = std::move(mo);
}

}  // namespace

AugmentChoice augment_choice(std::uint64_t seed, const AugmentOptions& options) {
    Rng rng(seed);
    AugmentChoice c;
    c.hflip = bernoulli(rng, options.hflip_probability);
    c.vflip = bernoulli(rng, options.vflip_probability);
    return c;
}

std::pair<Frame, LabelMap> augment(Frame frame, LabelMap label, std::uint64_t seed, const AugmentOptions& options) {
    MFFSEG_CHECK(frame.height == label.height && frame.width == label.width, ShapeError,
                 "augment: frame and label extents differ");
    Rng rng(seed);
    const bool h = bernoulli(rng, options.hflip_probability);
    const bool v = bernoulli(rng, options.vflip_probability);
    if (h) {
        hflip(frame);
        hflip(label);
    }
    if (v) {
        vflip(frame);
        vflip(label);
    }
    if (options.blur) gaussian_blur(frame, uniform(rng, 0.3, std::max(0.3, options.blur_sigma_max)));
    if (options.brightness)
        shift_brightness(frame, uniform(rng, -options.brightness_max_delta, options.brightness_max_delta));
    if (options.skew) shear(frame, label, uniform(rng, -options.skew_max, options.skew_max));
    return {std::move(frame), std::move(label)};
}

LabelMap downsample_labels(const LabelMap& label, int factor) {
    MFFSEG_CHECK(factor >= 1 && (factor & (factor - 1)) == 0, ShapeError,
                 "downsample_labels: factor " + std::to_string(factor) + " is not a power of two");
    MFFSEG_CHECK(label.height % factor == 0 && label.width % factor == 0, ShapeError,
                 "downsample_labels: " + std::to_string(label.height) + "x" + std::to_string(label.width) +
                     " not divisible by " + std::to_string(factor));
    if (factor == 1) return label;
    LabelMap out(label.height / factor, label.width / factor);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(y, x) = label.at(y * factor, x * factor);
    return out;
}

// ------------------------------------------------------------- manifest

std::string split_name(Split s) {
    switch (s) {
        case Split::All: return "all";
        case Split::Train: return "train";
        case Split::Test: return "test";
    }
    return "all";
}

namespace {

Split parse_split(const std::string& s) {
    if (s == "all") return Split::All;
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw DataError("manifest: unknown split '" + s + "'");
}

}  // namespace

std::pair<DatasetManifest, DatasetManifest> split_train_test(const DatasetManifest& manifest) {
    if (manifest.source == "endovis") {
        std::set<int> present;
        for (const auto& s : manifest.samples) present.insert(s.sequence);
        for (int k = 1; k <= kEndovisSequences; ++k)
            MFFSEG_CHECK(present.contains(k), DataError, "split: sequence " + std::to_string(k) + " is missing");
    }
    DatasetManifest train = manifest, test = manifest;
    train.samples.clear();
    test.samples.clear();
    train.split = Split::Train;
    test.split = Split::Test;
    for (const auto& s : manifest.samples) (s.sequence <= kLastTrainSequence ? train : test).samples.push_back(s);
    return {std::move(train), std::move(test)};
}

DatasetManifest scan_dataset(const fs::path& root, const TaskSpec& task, const std::string& source) {
    MFFSEG_CHECK(fs::is_directory(root), DataError, "dataset root '" + root.string() + "' is not a directory");
    const std::string prefix = "instrument_dataset_";
    std::map<int, fs::path> sequences;
    for (const auto& entry : fs::directory_iterator(root)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || !name.starts_with(prefix)) continue;
        int k = 0;
        const auto* first = name.data() + prefix.size();
        const auto [ptr, ec] = std::from_chars(first, name.data() + name.size(), k);
        if (ec != std::errc() || ptr != name.data() + name.size()) continue;
        sequences[k] = entry.path();
    }
    DatasetManifest m;
    m.root = root;
    m.source = source;
    m.task = task;
    m.split = Split::All;
    for (const auto& [k, dir] : sequences) {
        std::vector<fs::path> frames;
        const fs::path frames_dir = dir / "left_frames";
        MFFSEG_CHECK(fs::is_directory(frames_dir), DataError, "dataset: '" + frames_dir.string() + "' missing");
        for (const auto& e : fs::directory_iterator(frames_dir))
            if (e.is_regular_file() && e.path().extension() == ".png") frames.push_back(e.path());
        std::sort(frames.begin(), frames.end());
        std::vector<fs::path> gt_dirs;
        if (fs::is_directory(dir / "ground_truth"))
            for (const auto& e : fs::directory_iterator(dir / "ground_truth"))
                if (e.is_directory() && e.path().filename().string().ends_with("_labels")) gt_dirs.push_back(e.path());
        std::sort(gt_dirs.begin(), gt_dirs.end());
        for (const auto& f : frames) {
            Sample s;
            s.sequence = k;
            s.frame = fs::relative(f, root).generic_string();
            for (const auto& g : gt_dirs) {
                const fs::path label = g / f.filename();
                if (fs::exists(label)) s.labels.push_back(fs::relative(label, root).generic_string());
            }
            MFFSEG_CHECK(!s.labels.empty(), DataError, "dataset: no ground truth for '" + f.string() + "'");
            m.samples.push_back(std::move(s));
        }
    }
    return m;
}

void write_manifest(const fs::path& path, const DatasetManifest& m) {
    std::ofstream out(path, std::ios::trunc);
    MFFSEG_CHECK(out.good(), DataError, "manifest: cannot write '" + path.string() + "'");
    out << "#mffseg-manifest=1\n";
    out << "#root=" << m.root.generic_string() << "\n";
    out << "#source=" << m.source << "\n";
    out << "#task=" << m.task.name() << "\n";
    out << "#split=" << split_name(m.split) << "\n";
    for (const auto& s : m.samples) {
        out << s.frame << '\t';
        for (std::size_t i = 0; i < s.labels.size(); ++i) out << (i ? ";" : "") << s.labels[i];
        out << '\t' << s.sequence << '\n';
    }
    MFFSEG_CHECK(out.good(), DataError, "manifest: write to '" + path.string() + "' failed");
}

DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    MFFSEG_CHECK(in.good(), DataError, "manifest: cannot open '" + path.string() + "'");
    DatasetManifest m;
    bool versioned = false;
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            MFFSEG_CHECK(eq != std::string::npos, DataError, "manifest: malformed header at line " + std::to_string(line_no));
            const std::string key = line.substr(1, eq - 1), value = line.substr(eq + 1);
            if (key == "mffseg-manifest") {
                MFFSEG_CHECK(value == "1", DataError, "manifest: unsupported version " + value);
                versioned = true;
            } else if (key == "root") {
                m.root = value;
            } else if (key == "source") {
                m.source = value;
            } else if (key == "task") {
                m.task = TaskSpec::parse(value);
            } else if (key == "split") {
                m.split = parse_split(value);
            } else {
                throw DataError("manifest: unknown header key '" + key + "'");
            }
            continue;
        }
        std::istringstream fields(line);
        std::string frame, labels, seq;
        MFFSEG_CHECK(std::getline(fields, frame, '\t') && std::getline(fields, labels, '\t') &&
                         std::getline(fields, seq),
                     DataError, "manifest: malformed record at line " + std::to_string(line_no));
        Sample s;
        s.frame = frame;
        std::istringstream ls(labels);
        for (std::string l; std::getline(ls, l, ';');) s.labels.push_back(l);
        try {
            s.sequence = std::stoi(seq);
        } catch (const std::exception&) {
            throw DataError("manifest: bad sequence id at line " + std::to_string(line_no));
        }
        m.samples.push_back(std::move(s));
    }
    MFFSEG_CHECK(versioned, DataError, "manifest: '" + path.string() + "' lacks the version header");
    if (m.root.is_relative()) m.root = path.parent_path() / m.root;
    return m;
}

void write_means(const fs::path& path, const ChannelMeans& means) {
    std::ofstream out(path, std::ios::trunc);
    MFFSEG_CHECK(out.good(), DataError, "means: cannot write '" + path.string() + "'");
    char buf[64];
    const char* keys[3] = {"r", "g", "b"};
    out << "# per-channel mean of pixel/255 over the training split\n";
    for (int c = 0; c < 3; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", means.rgb[c]);
        out << keys[c] << '=' << buf << '\n';
    }
}

ChannelMeans read_means(const fs::path& path) {
    std::ifstream in(path);
    MFFSEG_CHECK(in.good(), DataError, "means: cannot open '" + path.string() + "'");
    ChannelMeans m;
    int seen = 0;
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        MFFSEG_CHECK(eq != std::string::npos, DataError, "means: malformed line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const int c = key == "r" ? 0 : key == "g" ? 1 : key == "b" ? 2 : -1;
        MFFSEG_CHECK(c >= 0, DataError, "means: unknown key '" + key + "'");
        try {
            m.rgb[c] = std::stod(line.substr(eq + 1));
        } catch (const std::exception&) {
            throw DataError("means: bad value for '" + key + "'");
        }
        seen |= 1 << c;
    }
    MFFSEG_CHECK(seen == 7, DataError, "means: '" + path.string() + "' must define r, g and b");
    return m;
}

// ----------------------------------------------------------------- load

LoadedSample load_sample(const DatasetManifest& m, std::size_t index, const CropWindow& window) {
    MFFSEG_CHECK(index < m.samples.size(), DataError, "load_sample: index out of range");
    const Sample& s = m.samples[index];
    auto maybe_crop = [&](auto img) {
        if (img.height == kRawHeight && img.width == kRawWidth) return crop_canvas(img, window);
        return img;
    };
    LoadedSample out;
    out.frame = maybe_crop(io::read_frame(m.root / s.frame));
    std::vector<InstrumentMask> masks;
    for (const auto& l : s.labels) {
        const fs::path p = m.root / l;
        masks.push_back({instrument_category(p.parent_path().filename().string()), maybe_crop(io::read_gray(p))});
    }
    out.label = encode_labels(masks, m.task);
    MFFSEG_CHECK(out.label.height == out.frame.height && out.label.width == out.frame.width, ShapeError,
                 "load_sample: label extent differs from frame for '" + s.frame + "'");
    return out;
}

ChannelMeans compute_channel_means(const DatasetManifest& m, const CropWindow& window) {
    MFFSEG_CHECK(!m.samples.empty(), DataError, "channel means: manifest is empty");
    std::array<double, 3> sum{0.0, 0.0, 0.0};
    double count = 0.0;
    for (const auto& s : m.samples) {
        Frame f = io::read_frame(m.root / s.frame);
        if (f.height == kRawHeight && f.width == kRawWidth) f = crop_canvas(f, window);
        std::array<double, 3> local{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < f.pixels.size(); i += 3)
            for (int c = 0; c < 3; ++c) local[c] += f.pixels[i + c];
        for (int c = 0; c < 3; ++c) sum[c] += local[c] / 255.0;
        count += static_cast<double>(f.pixels.size() / 3);
    }
    ChannelMeans means;
    for (int c = 0; c < 3; ++c) means.rgb[c] = sum[c] / count;
    return means;
}

ChannelMeans resolve_channel_means(const std::optional<ChannelMeans>& given, const DatasetManifest* train,
                                   const CropWindow& window) {
    if (given) return *given;
    MFFSEG_CHECK(train != nullptr && !train->samples.empty(), DataError,
                 "normalize: channel means not provided and no training split available");
    return compute_channel_means(*train, window);
}

Dataset::Dataset(DatasetManifest manifest, bool cache, CropWindow window)
    : manifest_(std::move(manifest)), window_(window) {
    if (cache) {
        cache_.reserve(manifest_.samples.size());
        for (std::size_t i = 0; i < manifest_.samples.size(); ++i) cache_.push_back(load_sample(manifest_, i, window_));
    }
}

LoadedSample Dataset::get(std::size_t index) const {
    if (!cache_.empty()) return cache_.at(index);
    return load_sample(manifest_, index, window_);
}

}  // namespace mffseg::data
