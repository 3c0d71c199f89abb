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

#include <atomic>
#include <cstdlib>
#include <string>

#include "ser/error.hpp"
#include "ser/simd.hpp"

namespace ser::simd {

#ifndef SER_HAVE_AVX2
const KernelTable* avx2_kernels() { return nullptr; }
#endif

namespace {

bool CpuHasAvx2Fma() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa DefaultIsa() {
  if (const char* env = std::getenv("SER_SIMD")) {
    if (std::string(env) == "scalar") return Isa::kScalar;
  }
  return isa_available(Isa::kAvx2) ? Isa::kAvx2 : Isa::kScalar;
}

struct Dispatch {
  std::atomic<const KernelTable*> table;
  std::atomic<Isa> isa;

  Dispatch() {
    const Isa chosen = DefaultIsa();
    isa.store(chosen);
    table.store(chosen == Isa::kAvx2 ? avx2_kernels() : &scalar_kernels());
  }
};

Dispatch& State() {
  static Dispatch state;
  return state;
}

}  // namespace

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return avx2_kernels() != nullptr && CpuHasAvx2Fma();
  }
  return false;
}

Isa active_isa() { return State().isa.load(); }

void select_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("ISA not available: ") + std::string(isa_name(isa)));
  }
  State().table.store(isa == Isa::kAvx2 ? avx2_kernels() : &scalar_kernels());
  State().isa.store(isa);
}

std::string_view isa_name(Isa isa) {
  return isa == Isa::kAvx2 ? "avx2" : "scalar";
}

const KernelTable& kernels() { return *State().table.load(std::memory_order_relaxed); }

}  // namespace ser::simd
