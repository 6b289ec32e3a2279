// Copyright 2026 The xmodal Authors. All Rights Reserved.
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

#include "xmodal/media_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "xmodal/error.hpp"

namespace xmodal {

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

uint16_t get_u16(std::string_view b, size_t& pos) {
  require(pos + 2 <= b.size(), "truncated data", ErrorCode::kFormat);
  const auto v = static_cast<uint16_t>(static_cast<unsigned char>(b[pos]) |
                                       (static_cast<unsigned char>(b[pos + 1]) << 8));
  pos += 2;
  return v;
}

int16_t to_pcm16(float x) {
  const float c = std::clamp(x, -1.0f, 1.0f);
  return static_cast<int16_t>(std::lround(c * 32767.0f));
}

}  // namespace

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

uint32_t get_u32(std::string_view b, size_t& pos) {
  require(pos + 4 <= b.size(), "truncated data", ErrorCode::kFormat);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= uint32_t(static_cast<unsigned char>(b[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

float get_f32(std::string_view b, size_t& pos) { return std::bit_cast<float>(get_u32(b, pos)); }

std::string encode_wav(const StereoWaveform& w) {
  w.validate();
  const uint32_t frames = static_cast<uint32_t>(w.size());
  const uint32_t data_bytes = frames * 2 * 2;
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVE";
  out += "fmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 2);
  put_u32(out, static_cast<uint32_t>(w.sample_rate));
  put_u32(out, static_cast<uint32_t>(w.sample_rate) * 4);
  put_u16(out, 4);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (uint32_t i = 0; i < frames; ++i) {
    put_u16(out, static_cast<uint16_t>(to_pcm16(w.left[i])));
    put_u16(out, static_cast<uint16_t>(to_pcm16(w.right[i])));
  }
  return out;
}

StereoWaveform decode_wav(std::string_view b) {
  require(b.size() >= 44 && b.substr(0, 4) == "RIFF" && b.substr(8, 4) == "WAVE",
          "not a RIFF/WAVE file", ErrorCode::kFormat);
  size_t pos = 12;
  int channels = 0;
  int bits = 0;
  StereoWaveform w;
  while (pos + 8 <= b.size()) {
    const auto id = b.substr(pos, 4);
    pos += 4;
    const uint32_t size = get_u32(b, pos);
    if (id == "fmt ") {
      size_t p = pos;
      require(get_u16(b, p) == 1, "only PCM WAV is supported", ErrorCode::kFormat);
      channels = get_u16(b, p);
      w.sample_rate = static_cast<int>(get_u32(b, p));
      p += 6;
      bits = get_u16(b, p);
    } else if (id == "data") {
      require(channels == 2 && bits == 16, "expected 16-bit stereo PCM", ErrorCode::kFormat);
      require(pos + size <= b.size(), "truncated WAV data", ErrorCode::kFormat);
      const size_t frames = size / 4;
      w.left.resize(frames);
      w.right.resize(frames);
      size_t p = pos;
      for (size_t i = 0; i < frames; ++i) {
        w.left[i] = static_cast<int16_t>(get_u16(b, p)) / 32767.0f;
        w.right[i] = static_cast<int16_t>(get_u16(b, p)) / 32767.0f;
      }
      w.duration_ms = static_cast<int>(static_cast<long>(frames) * 1000 / w.sample_rate);
      return w;
    }
    pos += size + (size & 1);
  }
  fail(ErrorCode::kFormat, "WAV file has no data chunk");
}

std::string encode_pgm(const Raster& r) {
  std::string out = "P5\n" + std::to_string(r.width) + " " + std::to_string(r.height) + "\n255\n";
  out.reserve(out.size() + r.pixels.size());
  for (float p : r.pixels) {
    out.push_back(static_cast<char>(std::lround(std::clamp(p, 0.0f, 1.0f) * 255.0f)));
  }
  return out;
}

Raster decode_pgm(std::string_view b) {
  std::istringstream is{std::string(b)};
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  is >> magic >> w >> h >> maxval;
  require(magic == "P5" && w > 0 && h > 0 && maxval == 255, "unsupported PGM header",
          ErrorCode::kFormat);
  is.get();
  const auto offset = static_cast<size_t>(is.tellg());
  require(b.size() >= offset + size_t(w) * h, "truncated PGM", ErrorCode::kFormat);
  Raster r(w, h);
  for (size_t i = 0; i < r.pixels.size(); ++i) {
    r.pixels[i] = static_cast<unsigned char>(b[offset + i]) / 255.0f;
  }
  return r;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

bool write_file_if_changed(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (std::filesystem::exists(path, ec) &&
      std::filesystem::file_size(path, ec) == bytes.size() && read_file(path) == bytes) {
    return false;
  }
  write_file(path, bytes);
  return true;
}

}  // namespace xmodal
