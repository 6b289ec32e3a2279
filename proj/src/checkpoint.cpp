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

#include "xmodal/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <span>

#include "xmodal/media_io.hpp"

namespace xmodal {
namespace {

constexpr char kMagic[4] = {'X', 'M', 'C', 'K'};
constexpr uint32_t kMaxRank = 8;

uint32_t crc_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  size_t pos = 0;
  while (pos < bytes.size()) {
    const size_t n = std::min<size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + pos), static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<uint32_t>(crc);
}

void put_i32(std::string& out, int v) { put_u32(out, static_cast<uint32_t>(v)); }
int get_i32(std::string_view b, size_t& pos) { return static_cast<int>(get_u32(b, pos)); }

void put_floats(std::string& out, std::span<const float> v) {
  const size_t base = out.size();
  out.resize(base + v.size() * 4);
  char* dst = out.data() + base;
  for (float f : v) {
    const uint32_t u = std::bit_cast<uint32_t>(f);
    for (int i = 0; i < 4; ++i) *dst++ = static_cast<char>((u >> (8 * i)) & 0xff);
  }
}

void get_floats(std::string_view b, size_t& pos, std::span<float> v) {
  require(pos + v.size() * 4 <= b.size(), "truncated checkpoint tensor", ErrorCode::kFormat);
  const auto* src = reinterpret_cast<const unsigned char*>(b.data() + pos);
  for (auto& f : v) {
    const uint32_t u = uint32_t(src[0]) | uint32_t(src[1]) << 8 | uint32_t(src[2]) << 16 |
                       uint32_t(src[3]) << 24;
    f = std::bit_cast<float>(u);
    src += 4;
  }
  pos += v.size() * 4;
}

}  // namespace

std::string encode_checkpoint(const Network<float>& net) {
  std::string out(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<uint32_t>(net.input_shape().size()));
  for (int d : net.input_shape()) put_i32(out, d);
  put_u32(out, static_cast<uint32_t>(net.layer_count()));
  for (size_t i = 0; i < net.layer_count(); ++i) {
    const LayerSpec s = net.layer(i).spec();
    put_u32(out, static_cast<uint32_t>(s.kind));
    put_i32(out, s.in);
    put_i32(out, s.out);
    put_i32(out, s.stride);
    put_i32(out, s.padding);
    put_f32(out, s.rate);
    auto ps = const_cast<Layer<float>&>(net.layer(i)).params();
    put_u32(out, static_cast<uint32_t>(ps.size()));
    for (const auto* p : ps) {
      put_u32(out, static_cast<uint32_t>(p->value.dims.size()));
      for (int d : p->value.dims) put_i32(out, d);
      put_floats(out, p->value.data);
    }
  }
  put_u32(out, crc_of(out));
  return out;
}

Network<float> decode_checkpoint(std::string_view b) {
  require(b.size() >= 12 && std::memcmp(b.data(), kMagic, 4) == 0, "not an XMCK checkpoint",
          ErrorCode::kFormat);
  size_t tail = b.size() - 4;
  const uint32_t stored = get_u32(b, tail);
  require(stored == crc_of(b.substr(0, b.size() - 4)), "checkpoint CRC mismatch",
          ErrorCode::kFormat);
  const std::string_view body = b.substr(0, b.size() - 4);
  size_t pos = 4;
  const uint32_t version = get_u32(body, pos);
  require(version == kCheckpointVersion, "unsupported checkpoint version " + std::to_string(version),
          ErrorCode::kFormat);
  const uint32_t rank = get_u32(body, pos);
  require(rank >= 1 && rank <= kMaxRank, "bad checkpoint input rank", ErrorCode::kFormat);
  Shape input;
  for (uint32_t i = 0; i < rank; ++i) input.push_back(get_i32(body, pos));
  for (int d : input) require(d > 0, "bad checkpoint input dims", ErrorCode::kFormat);
  Network<float> net(input);
  const uint32_t layers = get_u32(body, pos);
  require(layers <= 4096, "implausible layer count", ErrorCode::kFormat);
  for (uint32_t i = 0; i < layers; ++i) {
    LayerSpec s;
    const uint32_t kind = get_u32(body, pos);
    require(kind >= 1 && kind <= 6, "unknown layer tag " + std::to_string(kind), ErrorCode::kFormat);
    s.kind = static_cast<LayerKind>(kind);
    s.in = get_i32(body, pos);
    s.out = get_i32(body, pos);
    s.stride = get_i32(body, pos);
    s.padding = get_i32(body, pos);
    s.rate = get_f32(body, pos);
    try {
      net.add(s);
    } catch (const Error& e) {
      fail(ErrorCode::kFormat, std::string("checkpoint layer is inconsistent: ") + e.what());
    }
    auto ps = net.layer(i).params();
    const uint32_t count = get_u32(body, pos);
    require(count == ps.size(), "checkpoint parameter count mismatch", ErrorCode::kFormat);
    for (auto* p : ps) {
      const uint32_t r = get_u32(body, pos);
      require(r == p->value.dims.size(), "checkpoint parameter rank mismatch", ErrorCode::kFormat);
      for (uint32_t k = 0; k < r; ++k) {
        require(get_i32(body, pos) == p->value.dims[k], "checkpoint parameter dims mismatch",
                ErrorCode::kFormat);
      }
      get_floats(body, pos, p->value.data);
    }
  }
  require(pos == body.size(), "trailing bytes in checkpoint", ErrorCode::kFormat);
  require(net.all_finite(), "checkpoint holds non-finite parameters", ErrorCode::kFormat);
  return net;
}

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(net));
}

Network<float> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace xmodal
