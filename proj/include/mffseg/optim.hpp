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

#include <cstdint>
#include <string>
#include <vector>

#include "mffseg/checkpoint.hpp"
#include "mffseg/layers.hpp"

namespace mffseg::optim {

// base * (1 - iter / max_iter)^power; rejects iter outside [0, max_iter].
double poly_lr(double base, std::int64_t iter, std::int64_t max_iter, double power);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // Added to the gradient as weight_decay * w before the moment updates.
    double weight_decay = 0.0;
};

template <typename T>
class Adam {
public:
    Adam(nn::ParamRefs<T>& refs, AdamConfig config);

    // One update of every parameter from its accumulated gradient.
    void step(double lr);
    std::int64_t steps() const { return step_; }
    const AdamConfig& config() const { return config_; }

    // Moments under `ns` + parameter name + ".m" / ".v"; step count in the
    // header as `ns` + "step".
    void save(const std::string& ns, ckpt::ArrayContainer& out) const;
    void load(const std::string& ns, const ckpt::ArrayContainer& in);

private:
    nn::ParamRefs<T>& refs_;
    AdamConfig config_;
    std::vector<std::vector<T>> m_, v_;
    std::int64_t step_ = 0;
};

}  // namespace mffseg::optim
