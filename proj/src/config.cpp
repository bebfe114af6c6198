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

#include "mffseg/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace mffseg::config {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename N>
N parse_number(const std::string& key, const std::string& value) {
    N out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    MFFSEG_CHECK(ec == std::errc() && ptr == value.data() + value.size(), ConfigError,
                 "config: bad value '" + value + "' for key '" + key + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on") return true;
    if (value == "false" || value == "0" || value == "off") return false;
    throw ConfigError("config: bad boolean '" + value + "' for key '" + key + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    if (value.empty()) return out;
    std::istringstream in(value);
    for (std::string item; std::getline(in, item, ',');) out.push_back(parse_number<int>(key, trim(item)));
    return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"task", [](RunConfig& c, const std::string&, const std::string& v) { c.task = TaskSpec::parse(v); }},
        {"max_iter", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.max_iter = parse_number<std::int64_t>(k, v); }},
        {"batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.batch_size = parse_number<int>(k, v); }},
        {"base_lr_seg", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.base_lr_seg = parse_number<double>(k, v); }},
        {"base_lr_disc", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.base_lr_disc = parse_number<double>(k, v); }},
        {"beta1", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.beta1 = parse_number<double>(k, v); }},
        {"beta2", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.beta2 = parse_number<double>(k, v); }},
        {"weight_decay", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.weight_decay = parse_number<double>(k, v); }},
        {"poly_power", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.poly_power = parse_number<double>(k, v); }},
        {"lambda_aux", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lambda.lambda_aux = parse_number<double>(k, v); }},
        {"lambda_adv", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.lambda.lambda_adv = parse_number<double>(k, v); }},
        {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.seed = parse_number<std::uint64_t>(k, v); }},
        {"disc_seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.disc_seed = parse_number<std::uint64_t>(k, v); }},
        {"adversarial", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.adversarial_enabled = parse_bool(k, v); }},
        {"deterministic", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.deterministic = parse_bool(k, v); }},
        {"augment", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment_enabled = parse_bool(k, v); }},
        {"augment.hflip_probability", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment.hflip_probability = parse_number<double>(k, v); }},
        {"augment.vflip_probability", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment.vflip_probability = parse_number<double>(k, v); }},
        {"augment.blur", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment.blur = parse_bool(k, v); }},
        {"augment.brightness", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment.brightness = parse_bool(k, v); }},
        {"augment.skew", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.augment.skew = parse_bool(k, v); }},
        {"eval_every", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.eval_every = parse_number<std::int64_t>(k, v); }},
        {"checkpoint_every", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.checkpoint_every = parse_number<std::int64_t>(k, v); }},
        {"cache_dataset", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.cache_dataset = parse_bool(k, v); }},
        {"crop.top", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.crop.top = parse_number<int>(k, v); }},
        {"crop.left", [](RunConfig& c, const std::string& k, const std::string& v) { c.train.crop.left = parse_number<int>(k, v); }},
        {"net.preset", [](RunConfig& c, const std::string&, const std::string& v) {
             if (v == "default") c.network = nn::NetworkConfig{};
             else if (v == "miniature") c.network = nn::NetworkConfig::miniature(2);
             else throw ConfigError("config: net.preset must be default or miniature, got '" + v + "'");
         }},
        {"net.main_channels", [](RunConfig& c, const std::string& k, const std::string& v) { c.network.main_stage_channels = parse_int_list(k, v); }},
        {"net.aux_channels", [](RunConfig& c, const std::string& k, const std::string& v) { c.network.aux_stage_channels = parse_int_list(k, v); }},
        {"net.spp_grids", [](RunConfig& c, const std::string& k, const std::string& v) { c.network.spp_grids = parse_int_list(k, v); }},
        {"net.mff_bottleneck", [](RunConfig& c, const std::string& k, const std::string& v) { c.network.mff_bottleneck_channels = parse_number<int>(k, v); }},
        {"net.decoder_channels", [](RunConfig& c, const std::string& k, const std::string& v) { c.network.decoder_out_channels = parse_int_list(k, v); }},
        {"net.class_block_channels", [](RunConfig& c, const std::string& k, const std::string& v) { c.network.class_block_channels = parse_number<int>(k, v); }},
        {"synth.n", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_n = parse_number<int>(k, v); }},
        {"synth.height", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_height = parse_number<int>(k, v); }},
        {"synth.width", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_width = parse_number<int>(k, v); }},
        {"synth.sequences", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth_sequences = parse_number<int>(k, v); }},
        {"bench.height", [](RunConfig& c, const std::string& k, const std::string& v) { c.bench_height = parse_number<int>(k, v); }},
        {"bench.width", [](RunConfig& c, const std::string& k, const std::string& v) { c.bench_width = parse_number<int>(k, v); }},
        {"bench.warmup", [](RunConfig& c, const std::string& k, const std::string& v) { c.bench_warmup = parse_number<int>(k, v); }},
        {"bench.iters", [](RunConfig& c, const std::string& k, const std::string& v) { c.bench_iters = parse_number<int>(k, v); }},
    };
    return table;
}

}  // namespace

KeyValues parse_key_values(std::string_view text, const std::string& origin) {
    KeyValues out;
    std::istringstream in{std::string(text)};
    int line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        MFFSEG_CHECK(eq != std::string::npos, ConfigError,
                     origin + ":" + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        MFFSEG_CHECK(!key.empty(), ConfigError, origin + ":" + std::to_string(line_no) + ": empty key");
        MFFSEG_CHECK(!out.contains(key), ConfigError,
                     origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        out[key] = trim(t.substr(eq + 1));
    }
    return out;
}

KeyValues read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    MFFSEG_CHECK(in.good(), ConfigError, "config file '" + path.string() + "' cannot be read");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_key_values(buf.str(), path.string());
}

void apply_override(KeyValues& values, std::string_view assignment) {
    const auto eq = assignment.find('=');
    MFFSEG_CHECK(eq != std::string_view::npos && eq > 0, ConfigError,
                 "override '" + std::string(assignment) + "' is not key=value");
    values[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

RunConfig build_run_config(const KeyValues& values) {
    RunConfig c;
    // net.preset first so explicit net.* keys refine it; the task fixes the
    // class count last.
    if (auto it = values.find("net.preset"); it != values.end())
        for (const auto& [name, set] : setters())
            if (name == "net.preset") set(c, name, it->second);
    for (const auto& [key, value] : values) {
        if (key == "net.preset") continue;
        bool found = false;
        for (const auto& [name, set] : setters()) {
            if (name != key) continue;
            set(c, key, value);
            found = true;
            break;
        }
        MFFSEG_CHECK(found, ConfigError, "config: unknown key '" + key + "'");
    }
    c.network.num_classes = c.task.num_classes;
    c.network.validate();
    c.train.validate();
    return c;
}

}  // namespace mffseg::config
