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

#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lipfit {

/// A named, shaped array of doubles or 64-bit integers.
template <typename T>
struct NamedArray {
    std::vector<std::int64_t> shape;
    std::vector<T> values;
};

/**
 * Versioned binary container used for model files and checkpoints.
 *
 * Layout (all integers little-endian):
 *   8 bytes   magic "LIPFITAR"
 *   u32       container format version (currently 1)
 *   u64       header length N
 *   N bytes   UTF-8 JSON header:
 *               { "kind": str, "version": int, "meta": {...},
 *                 "arrays": [ {"name", "dtype": "f64"|"i64", "shape": [...],
 *                              "offset": bytes from payload start, "count"} ] }
 *   payload   raw little-endian array data, in header order
 *
 * Doubles are stored bit-exactly, so save/load round trips reproduce values
 * exactly.
 */
class Archive {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    Archive() = default;
    Archive(std::string kind, int version) : kind_(std::move(kind)), version_(version) {}

    [[nodiscard]] const std::string& kind() const { return kind_; }
    [[nodiscard]] int version() const { return version_; }

    nlohmann::json& meta() { return meta_; }
    [[nodiscard]] const nlohmann::json& meta() const { return meta_; }

    void put(const std::string& name, std::vector<std::int64_t> shape, std::vector<double> values);
    void put(const std::string& name, std::vector<std::int64_t> shape, std::vector<std::int64_t> values);

    [[nodiscard]] bool has(const std::string& name) const;
    [[nodiscard]] const NamedArray<double>& f64(const std::string& name) const;
    [[nodiscard]] const NamedArray<std::int64_t>& i64(const std::string& name) const;

    void save(const std::filesystem::path& path) const;
    /// Throws DataError on malformed files; if `expected_kind` is non-empty the
    /// kind field must match.
    static Archive load(const std::filesystem::path& path, const std::string& expected_kind = {});

private:
    std::string kind_;
    int version_ = 0;
    nlohmann::json meta_ = nlohmann::json::object();
    std::map<std::string, NamedArray<double>> f64_;
    std::map<std::string, NamedArray<std::int64_t>> i64_;
    std::vector<std::string> order_;
};

} // namespace lipfit
