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

#include <ostream>

#include "mffseg/error.hpp"

namespace mffseg::cli {

// 0 success, 2 usage, 3 config, 4 data, 5 numerical or runtime failure.
int exit_code(ErrorKind kind);

// Entry point for `mffseg <synth|train|eval|bench|predict> [options]`.
// Failures print one line "mffseg: error=<kind> message=<text>" to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mffseg::cli
