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

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace lipfit {

/**
 * Flat key/value configuration with dotted section names.
 *
 * File syntax:
 *
 *     # comment
 *     seed = 7
 *     [loss]              # subsequent keys are prefixed with "loss."
 *     lambda_lr = 2       # -> loss.lambda_lr
 *     train.seq_len = 20  # fully dotted keys are accepted anywhere
 *
 * Environment overrides use the form PREFIX_SECTION__KEY=value, e.g.
 * LIPFIT_LOSS__LIPREAD=4 sets loss.lipread.
 */
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    /// Shortest text that parses back to the same double.
    void set_double(const std::string& key, double value);
    void set_int(const std::string& key, long long value) { values_[key] = std::to_string(value); }
    void set_bool(const std::string& key, bool value) { values_[key] = value ? "true" : "false"; }
    [[nodiscard]] bool has(const std::string& key) const { return values_.contains(key); }
    [[nodiscard]] std::optional<std::string> find(const std::string& key) const;

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;

    /// Entries from `other` overwrite ours.
    void merge(const KeyValueConfig& other);
    /// Applies PREFIX_SECTION__KEY environment variables; returns the number applied.
    int apply_environment(const std::string& prefix, char** envp);

    /// Sorted, one `key = value` per line; parse(to_string()) reproduces the config.
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace lipfit
