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

#include "kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cstring>

namespace mffseg::nn::detail {

template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const T* a, const T* b, T* c,
          bool accumulate) {
    using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using ConstMap = Eigen::Map<const RowMat>;
    Eigen::Map<RowMat> cm(c, m, n);
    ConstMap am(a, trans_a ? k : m, trans_a ? m : k);
    ConstMap bm(b, trans_b ? n : k, trans_b ? k : n);

    auto run = [&](const auto& lhs, const auto& rhs) {
        if (accumulate)
            cm.noalias() += lhs * rhs;
        else
            cm.noalias() = lhs * rhs;
    };
    if (!trans_a && !trans_b)
        run(am, bm);
    else if (trans_a && !trans_b)
        run(am.transpose(), bm);
    else if (!trans_a && trans_b)
        run(am, bm.transpose());
    else
        run(am.transpose(), bm.transpose());
}

template <typename T>
void im2col(const T* image, const PatchGeometry& g, T* col) {
    const int k = g.kernel;
    const std::size_t grid = static_cast<std::size_t>(g.grid_h) * g.grid_w;
    for (int ch = 0; ch < g.channels; ++ch) {
        const T* src = image + static_cast<std::size_t>(ch) * g.height * g.width;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                T* dst = col + (static_cast<std::size_t>(ch) * k * k + ky * k + kx) * grid;
                // Range of grid columns whose tap lands inside the image.
                const int x_off = kx - g.pad;
                int ox_lo = x_off >= 0 ? 0 : (-x_off + g.stride - 1) / g.stride;
                int ox_hi = (g.width - 1 - x_off) >= 0 ? (g.width - 1 - x_off) / g.stride + 1 : 0;
                ox_hi = std::min(ox_hi, g.grid_w);
                ox_lo = std::min(ox_lo, ox_hi);
                for (int oy = 0; oy < g.grid_h; ++oy) {
                    T* row = dst + static_cast<std::size_t>(oy) * g.grid_w;
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.height) {
                        std::fill(row, row + g.grid_w, T{});
                        continue;
                    }
                    const T* srow = src + static_cast<std::size_t>(iy) * g.width;
                    std::fill(row, row + ox_lo, T{});
                    if (g.stride == 1) {
                        std::memcpy(row + ox_lo, srow + ox_lo + x_off, sizeof(T) * (ox_hi - ox_lo));
                    } else {
                        for (int ox = ox_lo; ox < ox_hi; ++ox) row[ox] = srow[ox * g.stride + x_off];
                    }
                    std::fill(row + ox_hi, row + g.grid_w, T{});
                }
            }
        }
    }
}

template <typename T>
void col2im(const T* col, const PatchGeometry& g, T* image) {
    const int k = g.kernel;
    const std::size_t grid = static_cast<std::size_t>(g.grid_h) * g.grid_w;
    for (int ch = 0; ch < g.channels; ++ch) {
        T* dst = image + static_cast<std::size_t>(ch) * g.height * g.width;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const T* src = col + (static_cast<std::size_t>(ch) * k * k + ky * k + kx) * grid;
                const int x_off = kx - g.pad;
                int ox_lo = x_off >= 0 ? 0 : (-x_off + g.stride - 1) / g.stride;
                int ox_hi = (g.width - 1 - x_off) >= 0 ? (g.width - 1 - x_off) / g.stride + 1 : 0;
                ox_hi = std::min(ox_hi, g.grid_w);
                for (int oy = 0; oy < g.grid_h; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.height) continue;
                    const T* row = src + static_cast<std::size_t>(oy) * g.grid_w;
                    T* drow = dst + static_cast<std::size_t>(iy) * g.width;
                    for (int ox = ox_lo; ox < ox_hi; ++ox) drow[ox * g.stride + x_off] += row[ox];
                }
            }
        }
    }
}

#define MFFSEG_INSTANTIATE(T)                                                                   \
    template void gemm<T>(bool, bool, int, int, int, const T*, const T*, T*, bool);            \
    template void im2col<T>(const T*, const PatchGeometry&, T*);                                \
    template void col2im<T>(const T*, const PatchGeometry&, T*);

MFFSEG_INSTANTIATE(float)
MFFSEG_INSTANTIATE(double)

}  // namespace mffseg::nn::detail
