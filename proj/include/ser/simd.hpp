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

// Runtime-dispatched arithmetic kernels.
//
// Every dense inner loop in the toolkit (spectral sums, convolutions, FC and
// LSTM matrix products) goes through the handful of primitives declared
// here. Each primitive has a portable scalar reference implementation and an
// AVX2/FMA implementation; the best one the CPU supports is selected on first
// use. Set SER_SIMD=scalar in the environment, or call select_isa(), to force
// the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace ser::simd {

enum class Isa { kScalar, kAvx2 };

struct KernelTable {
  double (*dot_f64)(const double* a, const double* b, std::size_t n);
  float (*dot_f32)(const float* a, const float* b, std::size_t n);
  // y += alpha * x
  void (*axpy_f64)(double alpha, const double* x, double* y, std::size_t n);
  void (*axpy_f32)(float alpha, const float* x, float* y, std::size_t n);
  double (*sum_squares_f64)(const double* x, std::size_t n);
  // out = a * b (elementwise)
  void (*mul_f64)(const double* a, const double* b, double* out,
                  std::size_t n);
};

const KernelTable& scalar_kernels();
// Null when the AVX2 variant was not compiled in.
const KernelTable* avx2_kernels();

bool isa_available(Isa isa);
Isa active_isa();
// Throws ser::Error(kInvalidArgument) if the ISA is unavailable here.
void select_isa(Isa isa);
std::string_view isa_name(Isa isa);
const KernelTable& kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot_f64(a.data(), b.data(), a.size());
}
inline float dot(std::span<const float> a, std::span<const float> b) {
  return kernels().dot_f32(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy_f64(alpha, x.data(), y.data(), x.size());
}
inline void axpy(float alpha, std::span<const float> x, std::span<float> y) {
  kernels().axpy_f32(alpha, x.data(), y.data(), x.size());
}
inline double sum_squares(std::span<const double> x) {
  return kernels().sum_squares_f64(x.data(), x.size());
}
inline void mul(std::span<const double> a, std::span<const double> b,
                std::span<double> out) {
  kernels().mul_f64(a.data(), b.data(), out.data(), a.size());
}

}  // namespace ser::simd
