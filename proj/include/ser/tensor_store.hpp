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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ser/error.hpp"

namespace ser {

template <typename T>
struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<T> data;

  std::size_t size() const noexcept { return data.size(); }
  bool operator==(const Tensor&) const = default;
};

inline std::size_t shape_size(std::span<const std::uint32_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(std::span<const std::uint32_t> shape);

// Name -> tensor map, iterated in name order. Names are unique and every
// tensor's data length equals the product of its shape.
template <typename T>
class TensorMap {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  // Throws kDuplicateName or kShapeMismatch.
  Tensor<T>& add(const std::string& name, std::vector<std::uint32_t> shape,
                 std::vector<T> data) {
    if (data.size() != shape_size(shape)) {
      throw Error(ErrorCode::kShapeMismatch, name + ": data length " +
                                                 std::to_string(data.size()) +
                                                 " does not match shape " + shape_string(shape));
    }
    auto [it, inserted] = tensors_.try_emplace(name, Tensor<T>{std::move(shape), std::move(data)});
    if (!inserted) throw Error(ErrorCode::kDuplicateName, "duplicate tensor " + name);
    return it->second;
  }

  Tensor<T>& add_zeros(const std::string& name, std::vector<std::uint32_t> shape) {
    const std::size_t n = shape_size(shape);
    return add(name, std::move(shape), std::vector<T>(n, T{}));
  }

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  // Throws kShapeMismatch when missing.
  const Tensor<T>& at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw Error(ErrorCode::kShapeMismatch, "missing tensor " + name);
    return it->second;
  }
  Tensor<T>& at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw Error(ErrorCode::kShapeMismatch, "missing tensor " + name);
    return it->second;
  }

  // at() plus a shape check.
  const Tensor<T>& expect(const std::string& name,
                          const std::vector<std::uint32_t>& shape) const {
    const auto& t = at(name);
    if (t.shape != shape) {
      throw Error(ErrorCode::kShapeMismatch, name + " has shape " + shape_string(t.shape) +
                                                 ", expected " + shape_string(shape));
    }
    return t;
  }

  std::size_t size() const noexcept { return tensors_.size(); }
  bool empty() const noexcept { return tensors_.empty(); }
  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& [_, t] : tensors_) n += t.size();
    return n;
  }

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  // Same names and shapes, all zero.
  TensorMap zeros_like() const {
    TensorMap out;
    for (const auto& [name, t] : tensors_) out.add_zeros(name, t.shape);
    return out;
  }

  bool same_layout(const TensorMap& other) const {
    if (size() != other.size()) return false;
    auto a = begin();
    auto b = other.begin();
    for (; a != end(); ++a, ++b) {
      if (a->first != b->first || a->second.shape != b->second.shape) return false;
    }
    return true;
  }

  bool operator==(const TensorMap&) const = default;

 private:
  Map tensors_;
};

// The on-disk container stores f32; this is its in-memory form.
using NamedTensorStore = TensorMap<float>;

// Container format: "NTSR", u32 version, u32 count, then per tensor a u16
// name length and UTF-8 name, u8 rank, u32 dims, f32 data, all little-endian.
inline constexpr std::uint32_t kTensorFileVersion = 1;

std::vector<std::uint8_t> encode_named_tensors(const NamedTensorStore& store);
// Throws kBadMagic, kTruncatedFile, kDuplicateName; kShapeMismatch for
// trailing bytes.
NamedTensorStore decode_named_tensors(std::span<const std::uint8_t> bytes);

void save_named_tensors(const NamedTensorStore& store, const std::filesystem::path& path);
NamedTensorStore load_named_tensors(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace ser
