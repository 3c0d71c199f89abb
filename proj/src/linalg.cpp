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

#include "ser/linalg.hpp"

#include "ser/simd.hpp"

namespace ser::linalg {

void gemv(std::span<const double> w, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  const auto& k = simd::kernels();
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] += k.dot_f64(w.data() + r * cols, x.data(), cols);
  }
}

void gemv_t(std::span<const double> w, std::size_t rows, std::size_t cols,
            std::span<const double> x, std::span<double> y) {
  const auto& k = simd::kernels();
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0) k.axpy_f64(x[r], w.data() + r * cols, y.data(), cols);
  }
}

void ger(std::span<double> w, std::size_t rows, std::size_t cols, double alpha,
         std::span<const double> x, std::span<const double> y) {
  const auto& k = simd::kernels();
  for (std::size_t r = 0; r < rows; ++r) {
    const double scale = alpha * x[r];
    if (scale != 0.0) k.axpy_f64(scale, y.data(), w.data() + r * cols, cols);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t n, std::size_t k) {
  const auto& kern = simd::kernels();
  // B rows stay hot in cache while A sweeps.
  for (std::size_t j = 0; j < n; ++j) {
    const double* bj = b.data() + j * k;
    for (std::size_t i = 0; i < m; ++i) {
      c[i * n + j] += kern.dot_f64(a.data() + i * k, bj, k);
    }
  }
}

void gemm_nn(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t n, std::size_t k) {
  const auto& kern = simd::kernels();
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip != 0.0) kern.axpy_f64(aip, b.data() + p * n, ci, n);
    }
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b,
             std::span<double> c, std::size_t m, std::size_t n, std::size_t k) {
  const auto& kern = simd::kernels();
  for (std::size_t p = 0; p < k; ++p) {
    const double* bp = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double api = a[p * m + i];
      if (api != 0.0) kern.axpy_f64(api, bp, c.data() + i * n, n);
    }
  }
}

}  // namespace ser::linalg
