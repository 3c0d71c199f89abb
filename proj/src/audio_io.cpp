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

#include "ser/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "ser/error.hpp"

namespace ser {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t ReadU16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t ReadU32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool TagIs(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

void PutU16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct FormatChunk {
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits_per_sample = 0;
};

FormatChunk ParseFormat(std::span<const std::uint8_t> chunk) {
  if (chunk.size() < 16) {
    throw Error(ErrorCode::kMalformedHeader, "fmt chunk shorter than 16 bytes");
  }
  std::uint16_t format = ReadU16(chunk, 0);
  if (format == kFormatExtensible && chunk.size() >= 26) {
    // Sub-format GUID begins with the plain format tag.
    format = ReadU16(chunk, 24);
  }
  FormatChunk fmt;
  fmt.channels = ReadU16(chunk, 2);
  fmt.sample_rate = ReadU32(chunk, 4);
  fmt.bits_per_sample = ReadU16(chunk, 14);
  if (format != kFormatPcm) {
    throw Error(ErrorCode::kUnsupportedFormat,
                "audio format " + std::to_string(format) + " is not integer PCM");
  }
  if (fmt.bits_per_sample != 16) {
    throw Error(ErrorCode::kUnsupportedFormat,
                std::to_string(fmt.bits_per_sample) + "-bit PCM is not supported");
  }
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    throw Error(ErrorCode::kMalformedHeader, "zero channels or sample rate");
  }
  return fmt;
}

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !TagIs(bytes, 0, "RIFF") || !TagIs(bytes, 8, "WAVE")) {
    throw Error(ErrorCode::kMalformedHeader, "missing RIFF/WAVE magic");
  }
  std::optional<FormatChunk> fmt;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = ReadU32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    // Writers occasionally overstate the final chunk; take what exists.
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (TagIs(bytes, pos, "fmt ")) {
      if (avail < size) {
        throw Error(ErrorCode::kMalformedHeader, "truncated fmt chunk");
      }
      fmt = ParseFormat(bytes.subspan(body, avail));
    } else if (TagIs(bytes, pos, "data")) {
      data = bytes.subspan(body, avail);
      have_data = true;
      if (fmt) break;
    }
    pos = body + size + (size & 1u);
  }
  if (!fmt) throw Error(ErrorCode::kMalformedHeader, "no fmt chunk");
  if (!have_data) throw Error(ErrorCode::kMalformedHeader, "no data chunk");

  const std::size_t channels = fmt->channels;
  const std::size_t frame_bytes = 2 * channels;
  const std::size_t n_frames = data.size() / frame_bytes;

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(fmt->sample_rate);
  clip.samples.resize(n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto raw = static_cast<std::int16_t>(ReadU16(data, f * frame_bytes + 2 * c));
      acc += static_cast<double>(raw) / 32768.0;
    }
    clip.samples[f] = acc / static_cast<double>(channels);
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  PutTag(out, "RIFF");
  PutU32(out, 36 + data_bytes);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  PutU32(out, 16);
  PutU16(out, kFormatPcm);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  PutU32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  PutU16(out, 2);
  PutU16(out, 16);
  PutTag(out, "data");
  PutU32(out, data_bytes);
  for (double s : clip.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(out, static_cast<std::uint16_t>(q));
  }
  return out;
}

void save_wav(const AudioClip& clip, const std::filesystem::path& path) {
  const auto bytes = encode_wav(clip);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

AudioClip resample(const AudioClip& clip, int target_hz) {
  if (clip.empty()) throw Error(ErrorCode::kEmptySignal, "resample of empty clip");
  if (target_hz <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "target rate must be positive");
  }
  if (target_hz == clip.sample_rate_hz) return clip;

  const std::size_t n_in = clip.samples.size();
  const double ratio = static_cast<double>(clip.sample_rate_hz) / target_hz;
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(n_in) * target_hz / clip.sample_rate_hz));

  AudioClip out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(n_out);
  const double last = static_cast<double>(n_in - 1);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = std::min(static_cast<double>(i) * ratio, last);
    const auto left = static_cast<std::size_t>(pos);
    const std::size_t right = std::min(left + 1, n_in - 1);
    const double frac = pos - static_cast<double>(left);
    const double v = clip.samples[left] + frac * (clip.samples[right] - clip.samples[left]);
    out.samples[i] = std::clamp(v, -1.0, 1.0);
  }
  return out;
}

}  // namespace ser
