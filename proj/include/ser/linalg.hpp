// Copyright 2026 The SER Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Row-major matrix products built on the dispatched kernels. All routines
// accumulate into their output (C += ...), so callers zero or seed it.

#include <cstddef>
#include <span>

namespace ser::linalg {

// y[rows] += W[rows x cols] * x[cols]
void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);

// y[cols] += W^T * x[rows]
void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y);

// W[rows x cols] += alpha * x[rows] * y[cols]^T
void ger(std::span<double> w, std::size_t rows, std::size_t cols, double alpha,
         std::span<const double> x, std::span<const double> y);

// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t n, std::size_t k);

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t n, std::size_t k);

// C[m x n] += A[k x m]^T * B[k x n]
void gemm_tn(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t n, std::size_t k);

}  // namespace ser::linalg
