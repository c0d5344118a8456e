// Copyright 2026 The lipfit Authors
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

#include "lipfit/core/archive.hpp"

#include "lipfit/core/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

namespace lipfit {

namespace {

constexpr char kMagic[8] = {'L', 'I', 'P', 'F', 'I', 'T', 'A', 'R'};

static_assert(std::endian::native == std::endian::little, "archive I/O assumes a little-endian host");

std::int64_t element_count(const std::vector<std::int64_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) {
        throw DataError("archive: unexpected end of file");
    }
    return v;
}

} // namespace

void Archive::put(const std::string& name, std::vector<std::int64_t> shape, std::vector<double> values) {
    if (element_count(shape) != static_cast<std::int64_t>(values.size())) {
        throw ParameterError("archive: shape/value count mismatch for '" + name + "'");
    }
    if (!has(name)) {
        order_.push_back(name);
    }
    i64_.erase(name);
    f64_[name] = {std::move(shape), std::move(values)};
}

void Archive::put(const std::string& name, std::vector<std::int64_t> shape, std::vector<std::int64_t> values) {
    if (element_count(shape) != static_cast<std::int64_t>(values.size())) {
        throw ParameterError("archive: shape/value count mismatch for '" + name + "'");
    }
    if (!has(name)) {
        order_.push_back(name);
    }
    f64_.erase(name);
    i64_[name] = {std::move(shape), std::move(values)};
}

bool Archive::has(const std::string& name) const { return f64_.contains(name) || i64_.contains(name); }

const NamedArray<double>& Archive::f64(const std::string& name) const {
    auto it = f64_.find(name);
    if (it == f64_.end()) {
        throw DataError("archive '" + kind_ + "': missing f64 array '" + name + "'");
    }
    return it->second;
}

const NamedArray<std::int64_t>& Archive::i64(const std::string& name) const {
    auto it = i64_.find(name);
    if (it == i64_.end()) {
        throw DataError("archive '" + kind_ + "': missing i64 array '" + name + "'");
    }
    return it->second;
}

void Archive::save(const std::filesystem::path& path) const {
    nlohmann::json header;
    header["kind"] = kind_;
    header["version"] = version_;
    header["meta"] = meta_;
    header["arrays"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& name : order_) {
        nlohmann::json entry;
        entry["name"] = name;
        entry["offset"] = offset;
        if (auto it = f64_.find(name); it != f64_.end()) {
            entry["dtype"] = "f64";
            entry["shape"] = it->second.shape;
            entry["count"] = it->second.values.size();
            offset += it->second.values.size() * sizeof(double);
        } else {
            const auto& a = i64_.at(name);
            entry["dtype"] = "i64";
            entry["shape"] = a.shape;
            entry["count"] = a.values.size();
            offset += a.values.size() * sizeof(std::int64_t);
        }
        header["arrays"].push_back(std::move(entry));
    }
    const std::string text = header.dump();

    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw DataError("archive: cannot open '" + path.string() + "' for writing");
    }
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, kFormatVersion);
    write_pod(os, static_cast<std::uint64_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& name : order_) {
        if (auto it = f64_.find(name); it != f64_.end()) {
            os.write(reinterpret_cast<const char*>(it->second.values.data()),
                     static_cast<std::streamsize>(it->second.values.size() * sizeof(double)));
        } else {
            const auto& a = i64_.at(name);
            os.write(reinterpret_cast<const char*>(a.values.data()),
                     static_cast<std::streamsize>(a.values.size() * sizeof(std::int64_t)));
        }
    }
    if (!os) {
        throw DataError("archive: write failed for '" + path.string() + "'");
    }
}

Archive Archive::load(const std::filesystem::path& path, const std::string& expected_kind) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DataError("archive: cannot open '" + path.string() + "'");
    }
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw DataError("archive: '" + path.string() + "' is not a lipfit archive");
    }
    const auto format = read_pod<std::uint32_t>(is);
    if (format != kFormatVersion) {
        throw DataError("archive: unsupported container version " + std::to_string(format));
    }
    const auto header_len = read_pod<std::uint64_t>(is);
    std::string text(header_len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(header_len));
    if (!is) {
        throw DataError("archive: truncated header");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("archive: malformed header: ") + e.what());
    }

    Archive ar(header.value("kind", std::string{}), header.value("version", 0));
    if (!expected_kind.empty() && ar.kind_ != expected_kind) {
        throw DataError("archive: expected kind '" + expected_kind + "', found '" + ar.kind_ + "'");
    }
    ar.meta_ = header.value("meta", nlohmann::json::object());
    const auto payload_start = is.tellg();
    for (const auto& entry : header.at("arrays")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
        const auto count = entry.at("count").get<std::uint64_t>();
        const auto offset = entry.at("offset").get<std::uint64_t>();
        if (element_count(shape) != static_cast<std::int64_t>(count)) {
            throw DataError("archive: inconsistent shape for '" + name + "'");
        }
        is.seekg(payload_start + static_cast<std::streamoff>(offset));
        if (entry.at("dtype") == "f64") {
            std::vector<double> v(count);
            is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
            if (!is) {
                throw DataError("archive: truncated payload for '" + name + "'");
            }
            ar.put(name, shape, std::move(v));
        } else if (entry.at("dtype") == "i64") {
            std::vector<std::int64_t> v(count);
            is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(std::int64_t)));
            if (!is) {
                throw DataError("archive: truncated payload for '" + name + "'");
            }
            ar.put(name, shape, std::move(v));
        } else {
            throw DataError("archive: unknown dtype for '" + name + "'");
        }
    }
    return ar;
}

} // namespace lipfit
