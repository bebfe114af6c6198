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

#include "mffseg/types.hpp"

namespace mffseg::viz {

using Rgb = std::array<std::uint8_t, 3>;

// Fixed colour of foreground class `cls` (>= 1) for `task`.
Rgb class_color(const TaskSpec& task, int cls);

// Background pixels keep the frame colour; class pixels are mixed half and
// half with the class colour.
Frame overlay(const Frame& frame, const LabelMap& labels, const TaskSpec& task);

}  // namespace mffseg::viz
