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

// Internal dense kernels shared by the convolution layers.

namespace mffseg::nn::detail {

// C (M x N) = op(A) * op(B) [+ C]; all matrices row-major and contiguous.
// op(A) is M x K, op(B) is K x N.
template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const T* a, const T* b, T* c,
          bool accumulate);

// Sliding-window geometry between an image (channels x height x width) and the
// grid of window origins (grid_h x grid_w).
struct PatchGeometry {
    int channels, height, width;
    int kernel, stride, pad;
    int grid_h, grid_w;
};

// col: (channels * kernel * kernel) x (grid_h * grid_w)
template <typename T>
void im2col(const T* image, const PatchGeometry& g, T* col);

// Scatter-add of col back into image (image must be pre-zeroed by caller).
template <typename T>
void col2im(const T* col, const PatchGeometry& g, T* image);

}  // namespace mffseg::nn::detail
