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

#include "mffseg/optim.hpp"

#include <cmath>

namespace mffseg::optim {

double poly_lr(double base, std::int64_t iter, std::int64_t max_iter, double power) {
    MFFSEG_CHECK(max_iter >= 1, ConfigError, "poly_lr: max_iter must be >= 1");
    MFFSEG_CHECK(iter >= 0 && iter <= max_iter, ConfigError,
                 "poly_lr: iteration " + std::to_string(iter) + " outside [0, " + std::to_string(max_iter) + "]");
    return base * std::pow(1.0 - static_cast<double>(iter) / static_cast<double>(max_iter), power);
}

template <typename T>
Adam<T>::Adam(nn::ParamRefs<T>& refs, AdamConfig config) : refs_(refs), config_(config) {
    MFFSEG_CHECK(config.beta1 >= 0.0 && config.beta1 < 1.0 && config.beta2 >= 0.0 && config.beta2 < 1.0, ConfigError,
                 "adam: betas must lie in [0, 1)");
    MFFSEG_CHECK(config.eps > 0.0 && config.weight_decay >= 0.0, ConfigError,
                 "adam: eps must be positive and weight decay non-negative");
    for (const auto& p : refs_.params) {
        m_.emplace_back(p.param->value.size(), T{});
        v_.emplace_back(p.param->value.size(), T{});
    }
}

template <typename T>
void Adam<T>::step(double lr) {
    ++step_;
    const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
    const T wd = static_cast<T>(config_.weight_decay), eps = static_cast<T>(config_.eps);
    const T c1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(step_)));
    const T c2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(step_)));
    const T rate = static_cast<T>(lr);
    for (std::size_t i = 0; i < refs_.params.size(); ++i) {
        T* w = refs_.params[i].param->value.data();
        const T* g = refs_.params[i].param->grad.data();
        T* m = m_[i].data();
        T* v = v_[i].data();
        const std::size_t n = m_[i].size();
        for (std::size_t j = 0; j < n; ++j) {
            const T grad = g[j] + wd * w[j];
            m[j] = b1 * m[j] + (T(1) - b1) * grad;
            v[j] = b2 * v[j] + (T(1) - b2) * grad * grad;
            w[j] -= rate * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
        }
    }
}

template <typename T>
void Adam<T>::save(const std::string& ns, ckpt::ArrayContainer& out) const {
    const auto dtype = sizeof(T) == 4 ? ckpt::DType::F32 : ckpt::DType::F64;
    for (std::size_t i = 0; i < refs_.params.size(); ++i) {
        const auto& name = refs_.params[i].name;
        out.add({ns + name + ".m", {m_[i].size()}, dtype, {m_[i].begin(), m_[i].end()}});
        out.add({ns + name + ".v", {v_[i].size()}, dtype, {v_[i].begin(), v_[i].end()}});
    }
    out.header[ns + "step"] = std::to_string(step_);
}

template <typename T>
void Adam<T>::load(const std::string& ns, const ckpt::ArrayContainer& in) {
    auto it = in.header.find(ns + "step");
    MFFSEG_CHECK(it != in.header.end(), DataError, "checkpoint lacks optimizer state '" + ns + "step'");
    for (std::size_t i = 0; i < refs_.params.size(); ++i) {
        for (auto [suffix, dst] : {std::pair{".m", &m_[i]}, std::pair{".v", &v_[i]}}) {
            const std::string key = ns + refs_.params[i].name + suffix;
            const auto* e = in.find(key);
            MFFSEG_CHECK(e != nullptr && e->values.size() == dst->size(), DataError,
                         "checkpoint: optimizer array '" + key + "' missing or mis-sized");
            for (std::size_t j = 0; j < dst->size(); ++j) (*dst)[j] = static_cast<T>(e->values[j]);
        }
    }
    step_ = std::stoll(it->second);
}

template class Adam<float>;
template class Adam<double>;

}  // namespace mffseg::optim
