// Copyright 2026 The mffseg Authors. All Rights Reserved.
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

// Named-array checkpoint container.
//
// Layout (all integers little-endian):
//   magic      8 bytes  "MFFSEGCK"
//   version    u32      (currently 1)
//   header     u32 length + UTF-8 text, one "key=value" per line, keys sorted
//   count      u32      number of arrays
//   manifest   per array: u16 name length, name bytes, u8 dtype (1 = f32,
//              2 = f64), u8 rank, rank x u64 extents, u64 data offset
//              (relative to the data section), u64 byte length
//   data       concatenated little-endian array payloads
//   checksum   u64 FNV-1a over every preceding byte
//
// Network weights live under "seg/", the discriminator under "disc/", and
// optimizer moments under "opt_seg/" and "opt_disc/".

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mffseg/segmentor.hpp"

namespace mffseg::ckpt {

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

struct ArrayEntry {
    std::string name;
    std::vector<std::uint64_t> shape;
    DType dtype = DType::F32;
    std::vector<double> values;  // widened in memory; stored at `dtype` width
};

class ArrayContainer {
public:
    static constexpr std::uint32_t kVersion = 1;

    std::map<std::string, std::string> header;

    void add(ArrayEntry entry);
    const ArrayEntry* find(const std::string& name) const;
    const std::vector<ArrayEntry>& arrays() const { return arrays_; }

    std::vector<char> serialize() const;
    static ArrayContainer deserialize(const std::vector<char>& bytes);

    // Write-temp-then-rename so readers never observe a partial file.
    void write(const std::filesystem::path& path) const;
    static ArrayContainer read(const std::filesystem::path& path);

private:
    std::vector<ArrayEntry> arrays_;
    std::map<std::string, std::size_t> index_;
};

template <typename T>
void export_arrays(const nn::ParamRefs<T>& refs, const std::string& ns, ArrayContainer& out);

// Loads every parameter and buffer named in `refs` from `ns`; throws DataError
// on a missing name or shape mismatch.
template <typename T>
void import_arrays(nn::ParamRefs<T>& refs, const std::string& ns, const ArrayContainer& in);

void write_network_config(const nn::NetworkConfig& config, std::map<std::string, std::string>& header);
nn::NetworkConfig read_network_config(const std::map<std::string, std::string>& header);

// Serialized size of a weights-only container for `segmentor`.
template <typename T>
std::size_t serialized_weight_bytes(nn::Segmentor<T>& segmentor);

}  // namespace mffseg::ckpt

namespace mffseg::nn {
using ckpt::serialized_weight_bytes;
}
