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
#include <string>
#include <vector>

// Hand-assembled RIFF/WAVE buffers for decoder tests.
namespace wavb {

inline void put_u16(std::vector<std::uint8_t>& b, std::uint16_t v) {
  b.push_back(v & 0xff);
  b.push_back(v >> 8);
}

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back((v >> (8 * i)) & 0xff);
}

inline void put_tag(std::vector<std::uint8_t>& b, const std::string& tag) {
  b.insert(b.end(), tag.begin(), tag.end());
}

inline std::vector<std::uint8_t> build(const std::vector<std::int16_t>& interleaved,
                                       std::uint16_t channels, std::uint32_t rate,
                                       std::uint16_t format = 1, std::uint16_t bits = 16,
                                       const std::string& magic = "RIFF",
                                       bool extra_chunk = false) {
  std::vector<std::uint8_t> fmt;
  put_u16(fmt, format);
  put_u16(fmt, channels);
  put_u32(fmt, rate);
  put_u32(fmt, rate * channels * bits / 8);
  put_u16(fmt, static_cast<std::uint16_t>(channels * bits / 8));
  put_u16(fmt, bits);
  std::vector<std::uint8_t> data;
  for (auto s : interleaved) put_u16(data, static_cast<std::uint16_t>(s));

  std::vector<std::uint8_t> body;
  put_tag(body, "WAVE");
  put_tag(body, "fmt ");
  put_u32(body, static_cast<std::uint32_t>(fmt.size()));
  body.insert(body.end(), fmt.begin(), fmt.end());
  if (extra_chunk) {
    put_tag(body, "LIST");
    put_u32(body, 3);
    body.insert(body.end(), {1, 2, 3, 0});  // odd size plus pad byte
  }
  put_tag(body, "data");
  put_u32(body, static_cast<std::uint32_t>(data.size()));
  body.insert(body.end(), data.begin(), data.end());

  std::vector<std::uint8_t> out;
  put_tag(out, magic);
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

}  // namespace wavb
