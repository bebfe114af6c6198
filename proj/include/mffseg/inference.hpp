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

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mffseg/data.hpp"
#include "mffseg/segmentor.hpp"

namespace mffseg::infer {

enum class Branch { Main, Auxiliary };

Branch parse_branch(std::string_view name);  // "main" | "auxiliary"
std::string branch_name(Branch branch);

// Stacks normalized frames of one extent into an N x 3 x H x W tensor.
nn::Tensor<float> make_input(std::span<const NormalizedFrame> frames);

// Full-resolution class scores from one exit: the main branch's test-mode
// probabilities, or the auxiliary logits upsampled x16 on the label sampling
// grid.
nn::Tensor<float> class_scores(nn::Segmentor<float>& segmentor, const nn::Tensor<float>& input, Branch branch);

// Per-pixel argmax over channels; ties go to the lowest class index.
std::vector<LabelMap> argmax_labels(const nn::Tensor<float>& scores);

}  // namespace mffseg::infer
