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

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "xmodal/render.hpp"

namespace xmodal {

// 16-bit PCM stereo RIFF/WAVE, little-endian.
std::string encode_wav(const StereoWaveform& w);
StereoWaveform decode_wav(std::string_view bytes);

// Binary PGM (P5), maxval 255.
std::string encode_pgm(const Raster& r);
Raster decode_pgm(std::string_view bytes);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);
// Writes only when the file is missing or its content differs. Returns true
// when the file was (re)written.
bool write_file_if_changed(const std::filesystem::path& path, std::string_view bytes);

// Little-endian helpers shared by the binary containers.
void put_u32(std::string& out, uint32_t v);
void put_f32(std::string& out, float v);
uint32_t get_u32(std::string_view bytes, size_t& pos);
float get_f32(std::string_view bytes, size_t& pos);

}  // namespace xmodal
