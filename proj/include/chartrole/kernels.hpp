// Copyright 2026 The chartrole Authors.
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

// Dense kernels behind the encoder and the image warps. Every kernel has a
// plain serial reference in `serial` and an OpenMP version in `omp`; the two
// must agree (bit-for-bit for the warps, to rounding for the products). The
// encoder calls `omp`; tests and the benchmark compare both.

#include <cstddef>
#include <span>

#include "chartrole/geometry.hpp"
#include "chartrole/image.hpp"

namespace chartrole::kernels {

namespace serial {

/// C = A·B (or C += A·B when accumulate). A: m×k, B: k×n, C: m×n.
void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// C = Aᵀ·B (or +=). A: k×m, B: k×n, C: m×n.
void gemm_at(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// C = A·Bᵀ (or +=). A: m×k, B: n×k, C: m×n.
void gemm_bt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);

/// Nearest-neighbour inverse warp onto the transform's output canvas.
Image rotate_nearest(const Image& src, const RotationTransform& t, Rgb fill);

}  // namespace serial

namespace omp {

void gemm(std::span<const double> a, std::span<const double> b, std::span<double> c,
          std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void gemm_at(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void gemm_bt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
Image rotate_nearest(const Image& src, const RotationTransform& t, Rgb fill);

}  // namespace omp

/// Threads the omp kernels may use (omp_get_max_threads, 1 without OpenMP).
int max_threads();

}  // namespace chartrole::kernels
