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

#include "xmodal/network.hpp"

namespace xmodal {

inline constexpr uint32_t kCheckpointVersion = 1;

// "XMCK" container: magic, version, input shape, layer count, then per layer
// its tag, attributes and parameter tensors (rank, dims, little-endian
// float32 data), followed by a CRC32 of everything before it.
std::string encode_checkpoint(const Network<float>& net);
Network<float> decode_checkpoint(std::string_view bytes);

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path);
Network<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace xmodal
