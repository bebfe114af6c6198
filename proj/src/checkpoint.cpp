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

#include "mffseg/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mffseg/error.hpp"

namespace mffseg::ckpt {

namespace {

constexpr char kMagic[8] = {'M', 'F', 'F', 'S', 'E', 'G', 'C', 'K'};

template <typename U>
U to_little(U v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(U)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<U>(bytes);
    }
    return v;
}

class Writer {
public:
    template <typename U>
    void put(U v) {
        v = to_little(v);
        const char* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(U));
    }
    void put_bytes(const std::string& s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    std::vector<char>& buffer() { return buf_; }

private:
    std::vector<char> buf_;
};

class Reader {
public:
    explicit Reader(const std::vector<char>& b) : buf_(b) {}
    template <typename U>
    U get() {
        need(sizeof(U));
        U v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(U));
        pos_ += sizeof(U);
        return to_little(v);
    }
    std::string get_bytes(std::size_t n) {
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }

private:
    void need(std::size_t n) const {
        MFFSEG_CHECK(pos_ + n <= buf_.size(), DataError, "checkpoint: truncated container");
    }
    const std::vector<char>& buf_;
    std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t element_count(const std::vector<std::uint64_t>& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::size_t dtype_width(DType d) { return d == DType::F32 ? 4 : 8; }

}  // namespace

void ArrayContainer::add(ArrayEntry entry) {
    MFFSEG_CHECK(entry.values.size() == element_count(entry.shape), DataError,
                 "checkpoint: array '" + entry.name + "' value count does not match its shape");
    MFFSEG_CHECK(!index_.contains(entry.name), DataError, "checkpoint: duplicate array '" + entry.name + "'");
    index_[entry.name] = arrays_.size();
    arrays_.push_back(std::move(entry));
}

const ArrayEntry* ArrayContainer::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : &arrays_[it->second];
}

std::vector<char> ArrayContainer::serialize() const {
    Writer w;
    w.put_bytes(std::string(kMagic, 8));
    w.put<std::uint32_t>(kVersion);
    std::string text;
    for (const auto& [k, v] : header) {
        MFFSEG_CHECK(k.find_first_of("=\n") == std::string::npos && v.find('\n') == std::string::npos, DataError,
                     "checkpoint: header entry '" + k + "' contains a reserved character");
        text += k + "=" + v + "\n";
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
    w.put_bytes(text);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(arrays_.size()));
    std::uint64_t offset = 0;
    for (const auto& a : arrays_) {
        w.put<std::uint16_t>(static_cast<std::uint16_t>(a.name.size()));
        w.put_bytes(a.name);
        w.put<std::uint8_t>(static_cast<std::uint8_t>(a.dtype));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(a.shape.size()));
        for (auto d : a.shape) w.put<std::uint64_t>(d);
        const std::uint64_t bytes = a.values.size() * dtype_width(a.dtype);
        w.put<std::uint64_t>(offset);
        w.put<std::uint64_t>(bytes);
        offset += bytes;
    }
    for (const auto& a : arrays_) {
        if (a.dtype == DType::F32) {
            for (double v : a.values) w.put<float>(static_cast<float>(v));
        } else {
            for (double v : a.values) w.put<double>(v);
        }
    }
    auto& buf = w.buffer();
    w.put<std::uint64_t>(fnv1a(buf.data(), buf.size()));
    return std::move(buf);
}

ArrayContainer ArrayContainer::deserialize(const std::vector<char>& bytes) {
    MFFSEG_CHECK(bytes.size() >= 8 + 4 + 8 && std::memcmp(bytes.data(), kMagic, 8) == 0, DataError,
                 "checkpoint: not an mffseg container (bad magic)");
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    MFFSEG_CHECK(to_little(stored) == fnv1a(bytes.data(), bytes.size() - 8), DataError,
                 "checkpoint: checksum mismatch (corrupt file)");

    Reader r(bytes);
    r.get_bytes(8);
    const auto version = r.get<std::uint32_t>();
    MFFSEG_CHECK(version == kVersion, DataError, "checkpoint: unsupported version " + std::to_string(version));
    ArrayContainer c;
    std::istringstream text(r.get_bytes(r.get<std::uint32_t>()));
    for (std::string line; std::getline(text, line);) {
        const auto eq = line.find('=');
        MFFSEG_CHECK(eq != std::string::npos, DataError, "checkpoint: malformed header line '" + line + "'");
        c.header[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const auto count = r.get<std::uint32_t>();
    struct Pending {
        ArrayEntry entry;
        std::uint64_t offset, bytes;
    };
    std::vector<Pending> pending;
    for (std::uint32_t i = 0; i < count; ++i) {
        Pending p;
        p.entry.name = r.get_bytes(r.get<std::uint16_t>());
        const auto dtype = r.get<std::uint8_t>();
        MFFSEG_CHECK(dtype == 1 || dtype == 2, DataError, "checkpoint: unknown dtype code " + std::to_string(dtype));
        p.entry.dtype = static_cast<DType>(dtype);
        const auto rank = r.get<std::uint8_t>();
        for (int d = 0; d < rank; ++d) p.entry.shape.push_back(r.get<std::uint64_t>());
        p.offset = r.get<std::uint64_t>();
        p.bytes = r.get<std::uint64_t>();
        MFFSEG_CHECK(p.bytes == element_count(p.entry.shape) * dtype_width(p.entry.dtype), DataError,
                     "checkpoint: array '" + p.entry.name + "' byte length disagrees with its shape");
        pending.push_back(std::move(p));
    }
    const std::size_t data_start = r.pos();
    for (auto& p : pending) {
        MFFSEG_CHECK(data_start + p.offset + p.bytes <= bytes.size() - 8, DataError,
                     "checkpoint: array '" + p.entry.name + "' extends past the data section");
        const char* src = bytes.data() + data_start + p.offset;
        const std::size_t n = element_count(p.entry.shape);
        p.entry.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (p.entry.dtype == DType::F32) {
                float v;
                std::memcpy(&v, src + 4 * i, 4);
                p.entry.values[i] = to_little(v);
            } else {
                double v;
                std::memcpy(&v, src + 8 * i, 8);
                p.entry.values[i] = to_little(v);
            }
        }
        c.add(std::move(p.entry));
    }
    return c;
}

void ArrayContainer::write(const std::filesystem::path& path) const {
    const auto bytes = serialize();
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        MFFSEG_CHECK(out.good(), DataError, "checkpoint: cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        MFFSEG_CHECK(out.good(), DataError, "checkpoint: write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

ArrayContainer ArrayContainer::read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    MFFSEG_CHECK(in.good(), DataError, "checkpoint: cannot open '" + path.string() + "'");
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
}

namespace {

template <typename T>
ArrayEntry make_entry(const std::string& name, const nn::Tensor<T>& t) {
    ArrayEntry e;
    e.name = name;
    const auto& s = t.shape();
    e.shape = {static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.c), static_cast<std::uint64_t>(s.h),
               static_cast<std::uint64_t>(s.w)};
    e.dtype = std::is_same_v<T, float> ? DType::F32 : DType::F64;
    e.values.assign(t.data(), t.data() + t.size());
    return e;
}

template <typename T>
void load_entry(const ArrayContainer& in, const std::string& name, nn::Tensor<T>& t) {
    const ArrayEntry* e = in.find(name);
    MFFSEG_CHECK(e != nullptr, DataError, "checkpoint: missing array '" + name + "'");
    const auto& s = t.shape();
    const std::vector<std::uint64_t> want{static_cast<std::uint64_t>(s.n), static_cast<std::uint64_t>(s.c),
                                          static_cast<std::uint64_t>(s.h), static_cast<std::uint64_t>(s.w)};
    MFFSEG_CHECK(e->shape == want, DataError, "checkpoint: array '" + name + "' has shape incompatible with " + s.str());
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<T>(e->values[i]);
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::vector<int> split_ints(const std::string& key, const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw DataError("checkpoint: header '" + key + "' has non-integer entry '" + item + "'");
        }
    }
    return out;
}

}  // namespace

template <typename T>
void export_arrays(const nn::ParamRefs<T>& refs, const std::string& ns, ArrayContainer& out) {
    for (const auto& p : refs.params) out.add(make_entry(ns + p.name, p.param->value));
    for (const auto& b : refs.buffers) out.add(make_entry(ns + b.name, *b.buffer));
}

template <typename T>
void import_arrays(nn::ParamRefs<T>& refs, const std::string& ns, const ArrayContainer& in) {
    for (auto& p : refs.params) load_entry(in, ns + p.name, p.param->value);
    for (auto& b : refs.buffers) load_entry(in, ns + b.name, *b.buffer);
}

void write_network_config(const nn::NetworkConfig& c, std::map<std::string, std::string>& h) {
    h["net.num_classes"] = std::to_string(c.num_classes);
    h["net.main_channels"] = join_ints(c.main_stage_channels);
    h["net.aux_channels"] = join_ints(c.aux_stage_channels);
    h["net.spp_grids"] = join_ints(c.spp_grids);
    h["net.mff_bottleneck"] = std::to_string(c.mff_bottleneck_channels);
    h["net.decoder_channels"] = join_ints(c.decoder_out_channels);
    h["net.class_block_channels"] = std::to_string(c.class_block_channels);
}

nn::NetworkConfig read_network_config(const std::map<std::string, std::string>& h) {
    auto get = [&](const std::string& k) {
        auto it = h.find(k);
        MFFSEG_CHECK(it != h.end(), DataError, "checkpoint: header lacks '" + k + "'");
        return it->second;
    };
    nn::NetworkConfig c;
    c.num_classes = split_ints("net.num_classes", get("net.num_classes")).at(0);
    c.main_stage_channels = split_ints("net.main_channels", get("net.main_channels"));
    c.aux_stage_channels = split_ints("net.aux_channels", get("net.aux_channels"));
    c.spp_grids = split_ints("net.spp_grids", get("net.spp_grids"));
    c.mff_bottleneck_channels = split_ints("net.mff_bottleneck", get("net.mff_bottleneck")).at(0);
    c.decoder_out_channels = split_ints("net.decoder_channels", get("net.decoder_channels"));
    c.class_block_channels = split_ints("net.class_block_channels", get("net.class_block_channels")).at(0);
    return c;
}

template <typename T>
std::size_t serialized_weight_bytes(nn::Segmentor<T>& segmentor) {
    ArrayContainer c;
    write_network_config(segmentor.config(), c.header);
    export_arrays(segmentor.refs(), "seg/", c);
    return c.serialize().size();
}

#define MFFSEG_INSTANTIATE_CKPT(T)                                                                  \
    template void export_arrays<T>(const nn::ParamRefs<T>&, const std::string&, ArrayContainer&);   \
    template void import_arrays<T>(nn::ParamRefs<T>&, const std::string&, const ArrayContainer&);   \
    template std::size_t serialized_weight_bytes<T>(nn::Segmentor<T>&);

MFFSEG_INSTANTIATE_CKPT(float)
MFFSEG_INSTANTIATE_CKPT(double)

}  // namespace mffseg::ckpt
