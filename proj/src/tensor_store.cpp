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

#include "ser/tensor_store.hpp"

#include <fstream>
#include <iterator>

#include "ser/binary_io.hpp"

namespace ser {

std::string shape_string(std::span<const std::uint32_t> shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<std::uint8_t> encode_named_tensors(const NamedTensorStore& store) {
  binary::Writer w;
  w.tag("NTSR");
  w.u32(kTensorFileVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, tensor] : store) {
    w.short_string(name);
    if (tensor.shape.size() > 0xff) {
      throw Error(ErrorCode::kShapeMismatch, name + ": rank above 255");
    }
    w.u8(static_cast<std::uint8_t>(tensor.shape.size()));
    for (auto d : tensor.shape) w.u32(d);
    for (float v : tensor.data) w.f32(v);
  }
  return w.bytes();
}

NamedTensorStore decode_named_tensors(std::span<const std::uint8_t> bytes) {
  binary::Reader r(bytes);
  if (bytes.size() < 4 || r.tag() != "NTSR") {
    throw Error(ErrorCode::kBadMagic, "not a named-tensor container");
  }
  const std::uint32_t version = r.u32();
  if (version != kTensorFileVersion) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "named-tensor container version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  NamedTensorStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.short_string();
    const std::uint8_t rank = r.u8();
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = shape_size(shape);
    r.require(n * 4);
    std::vector<float> data(n);
    for (auto& v : data) v = r.f32();
    store.add(name, std::move(shape), std::move(data));
  }
  if (!r.at_end()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::to_string(r.remaining()) + " bytes beyond the declared tensors");
  }
  return store;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path.string());
}

void save_named_tensors(const NamedTensorStore& store, const std::filesystem::path& path) {
  write_file_bytes(path, encode_named_tensors(store));
}

NamedTensorStore load_named_tensors(const std::filesystem::path& path) {
  return decode_named_tensors(read_file_bytes(path));
}

}  // namespace ser
