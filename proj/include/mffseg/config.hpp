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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mffseg/trainer.hpp"

namespace mffseg::config {

// Flat key=value settings. '#' starts a comment; blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text, const std::string& origin);
// Throws ConfigError when the file is missing or malformed.
KeyValues read_config_file(const std::filesystem::path& path);
// "key=value" from the command line; replaces any earlier value.
void apply_override(KeyValues& values, std::string_view assignment);

// Everything a CLI run can configure.
struct RunConfig {
    TaskSpec task = TaskSpec::binary();
    train::TrainConfig train;
    nn::NetworkConfig network;
    // synth
    int synth_n = 16;
    int synth_height = 256;
    int synth_width = 320;
    int synth_sequences = 8;
    // bench
    int bench_height = 1024;
    int bench_width = 1280;
    int bench_warmup = 5;
    int bench_iters = 30;
};

// Every recognised key, in documentation order.
const std::vector<std::string>& known_keys();

// Unknown keys and unparsable values throw ConfigError naming the key.
RunConfig build_run_config(const KeyValues& values);

}  // namespace mffseg::config
