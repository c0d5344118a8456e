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

#include "lipfit/core/config.hpp"

#include "lipfit/core/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace lipfit {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const std::string t = trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ParameterError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            }
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) {
            throw ParameterError(origin + ":" + std::to_string(lineno) + ": empty key");
        }
        if (!section.empty() && key.find('.') == std::string::npos) {
            key = section + "." + key;
        }
        cfg.values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParameterError("cannot open config file '" + path.string() + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValueConfig::find(const std::string& key) const {
    if (auto it = values_.find(key); it != values_.end()) {
        return it->second;
    }
    return std::nullopt;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return find(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto v = find(key);
    if (!v) {
        return fallback;
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(*v, &used);
        if (used != v->size()) {
            throw std::invalid_argument("trailing characters");
        }
        return d;
    } catch (const std::exception&) {
        throw ParameterError("config key '" + key + "': expected a number, got '" + *v + "'");
    }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto v = find(key);
    if (!v) {
        return fallback;
    }
    long long out = 0;
    const auto* end = v->data() + v->size();
    const auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ParameterError("config key '" + key + "': expected an integer, got '" + *v + "'");
    }
    return out;
}

void KeyValueConfig::set_double(const std::string& key, double value) {
    char buf[32];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, value);
        if (std::strtod(buf, nullptr) == value) {
            break;
        }
    }
    values_[key] = buf;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    const auto v = find(key);
    if (!v) {
        return fallback;
    }
    const std::string s = lower(*v);
    if (s == "1" || s == "true" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "0" || s == "false" || s == "no" || s == "off") {
        return false;
    }
    throw ParameterError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

void KeyValueConfig::merge(const KeyValueConfig& other) {
    for (const auto& [k, v] : other.values_) {
        values_[k] = v;
    }
}

int KeyValueConfig::apply_environment(const std::string& prefix, char** envp) {
    if (envp == nullptr) {
        return 0;
    }
    int applied = 0;
    const std::string full_prefix = prefix + "_";
    for (char** e = envp; *e != nullptr; ++e) {
        std::string_view entry(*e);
        if (!entry.starts_with(full_prefix)) {
            continue;
        }
        const auto eq = entry.find('=');
        if (eq == std::string_view::npos) {
            continue;
        }
        std::string name = lower(std::string(entry.substr(full_prefix.size(), eq - full_prefix.size())));
        std::string key;
        for (std::size_t i = 0; i < name.size(); ++i) {
            if (name[i] == '_' && i + 1 < name.size() && name[i + 1] == '_') {
                key += '.';
                ++i;
            } else {
                key += name[i];
            }
        }
        if (key.empty()) {
            continue;
        }
        values_[key] = std::string(entry.substr(eq + 1));
        ++applied;
    }
    return applied;
}

std::string KeyValueConfig::to_string() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k + " = " + v + "\n";
    }
    return out;
}

} // namespace lipfit
