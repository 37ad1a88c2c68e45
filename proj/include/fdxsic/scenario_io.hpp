// SPDX-License-Identifier: Apache-2.0
//
// fdxsic: digital self-interference cancellation simulation library
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "signal.hpp"

namespace fdxsic {

struct io_error : error {
    using error::error;
};

/// Ordered key-value text, one `key = value` pair per line, '#' comments.
struct kv_list {
    std::vector<std::pair<std::string, std::string>> items;

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : items)
            if (k == key)
                return &v;
        return nullptr;
    }

    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : items)
            if (k == key) {
                v = value;
                return;
            }
        items.emplace_back(key, value);
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, end);
}

inline std::string format_double_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ',';
        s += format_double(v[i]);
    }
    return s;
}

inline std::string format_int_list(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

inline double parse_double(const std::string& s, const std::string& key) {
    const std::string t = trim(s);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || t.empty())
        throw invalid_config("bad numeric value '" + s + "' for " + key);
    return v;
}

inline long parse_int(const std::string& s, const std::string& key) {
    const std::string t = trim(s);
    char* end = nullptr;
    const long v = std::strtol(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || t.empty())
        throw invalid_config("bad integer value '" + s + "' for " + key);
    return v;
}

template <typename T, typename Fn>
std::vector<T> parse_list(const std::string& s, const std::string& key, Fn parse_one) {
    std::vector<T> out;
    const std::string t = trim(s);
    if (t.empty())
        return out;
    std::size_t pos = 0;
    while (pos <= t.size()) {
        const std::size_t comma = t.find(',', pos);
        const std::string piece = comma == std::string::npos ? t.substr(pos) : t.substr(pos, comma - pos);
        out.push_back(parse_one(piece, key));
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

} // namespace detail

inline kv_list parse_kv(const std::string& text) {
    kv_list kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty())
            continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw invalid_config(detail::strprintf("config line %d has no '='", lineno));
        kv.items.emplace_back(detail::trim(t.substr(0, eq)), detail::trim(t.substr(eq + 1)));
    }
    return kv;
}

inline kv_list parse_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_kv(buf.str());
}

inline void write_kv_file(const kv_list& kv, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw io_error("cannot write config file " + path);
    for (const auto& [k, v] : kv.items)
        out << k << " = " << v << "\n";
    if (!out)
        throw io_error("write failed for " + path);
}

/// A scenario plus the array and framing it is simulated with.
struct sim_config {
    scenario sc;
    array_geometry geom;
    frame_spec frame;
};

/// Applies one configuration key. Returns false when the key is not one of
/// the scenario/array/frame keys (callers decide whether that is an error).
inline bool set_config_key(sim_config& cfg, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "scenario.label")
        cfg.sc.label = trim(value);
    else if (key == "scenario.desired_angle_deg")
        cfg.sc.desired_angle_deg = parse_double(value, key);
    else if (key == "scenario.int_angles_deg")
        cfg.sc.int_angles_deg = parse_list<double>(value, key, parse_double);
    else if (key == "scenario.int_powers_db")
        cfg.sc.int_powers_db = parse_list<double>(value, key, parse_double);
    else if (key == "scenario.path_delays_symbols")
        cfg.sc.path_delays_symbols = parse_list<int>(value, key, [](const std::string& s, const std::string& k) {
            return static_cast<int>(parse_int(s, k));
        });
    else if (key == "scenario.noise_power_db")
        cfg.sc.noise_power_db = parse_double(value, key);
    else if (key == "array.n_antennas")
        cfg.geom.n_antennas = static_cast<int>(parse_int(value, key));
    else if (key == "array.spacing_wavelengths")
        cfg.geom.spacing_wavelengths = parse_double(value, key);
    else if (key == "frame.block_len")
        cfg.frame.block_len = static_cast<int>(parse_int(value, key));
    else if (key == "frame.pilot_fraction")
        cfg.frame.pilot_fraction = parse_double(value, key);
    else
        return false;
    return true;
}

inline void validate(const sim_config& cfg) {
    validate(cfg.sc);
    validate(cfg.geom);
    validate(cfg.frame);
}

inline sim_config config_from_kv(const kv_list& kv) {
    sim_config cfg;
    for (const auto& [k, v] : kv.items) {
        if (set_config_key(cfg, k, v))
            continue;
        const bool scenario_family = k.rfind("scenario.", 0) == 0 || k.rfind("array.", 0) == 0 ||
                                     k.rfind("frame.", 0) == 0;
        if (scenario_family)
            throw invalid_config("unknown configuration key " + k);
        // other families (plan.*, artifact.*) belong to the caller
    }
    validate(cfg);
    return cfg;
}

inline kv_list config_to_kv(const sim_config& cfg) {
    using namespace detail;
    kv_list kv;
    kv.set("scenario.label", cfg.sc.label);
    kv.set("scenario.desired_angle_deg", format_double(cfg.sc.desired_angle_deg));
    kv.set("scenario.int_angles_deg", format_double_list(cfg.sc.int_angles_deg));
    kv.set("scenario.int_powers_db", format_double_list(cfg.sc.int_powers_db));
    kv.set("scenario.path_delays_symbols", format_int_list(cfg.sc.path_delays_symbols));
    kv.set("scenario.noise_power_db", format_double(cfg.sc.noise_power_db));
    kv.set("array.n_antennas", std::to_string(cfg.geom.n_antennas));
    kv.set("array.spacing_wavelengths", format_double(cfg.geom.spacing_wavelengths));
    kv.set("frame.block_len", std::to_string(cfg.frame.block_len));
    kv.set("frame.pilot_fraction", format_double(cfg.frame.pilot_fraction));
    return kv;
}

namespace detail {

inline sim_config make_preset(const char* label, std::vector<double> angles,
                              std::vector<double> powers, double spacing) {
    sim_config cfg;
    cfg.sc.label = label;
    cfg.sc.desired_angle_deg = 30.0;
    cfg.sc.int_angles_deg = std::move(angles);
    cfg.sc.int_powers_db = std::move(powers);
    cfg.sc.path_delays_symbols = {0, 1, 2, 3};
    cfg.sc.noise_power_db = -20.0;
    cfg.geom.n_antennas = 10;
    cfg.geom.spacing_wavelengths = spacing;
    cfg.frame.block_len = 1000;
    cfg.frame.pilot_fraction = 0.10;
    return cfg;
}

} // namespace detail

/// The seven built-in measurement scenarios.
inline const std::vector<sim_config>& preset_configs() {
    static const std::vector<sim_config> presets = {
        detail::make_preset("epa", {60, 20, 80, -30}, {0, -1, -2, -3}, 0.5),
        detail::make_preset("s1", {113, 146, -134, 149}, {-20, -30, -40, -50}, 0.5),
        detail::make_preset("s2", {113, 146, -134, 149}, {-8, -15, -20, -30}, 0.5),
        detail::make_preset("s3", {-95, -105, -130, -150}, {-4, -5, -7, -8}, 0.5),
        detail::make_preset("s4", {-95, -105, -130, -150}, {-15, -18, -20, -25}, 0.5),
        detail::make_preset("s5", {145, 160, 50, 25}, {-15, -18, -20, -25}, 0.25),
        detail::make_preset("s6", {-60, -85, -90, -115}, {-2, -5, -10, -12}, 0.25),
    };
    return presets;
}

inline const sim_config* find_preset(const std::string& name) {
    for (const sim_config& cfg : preset_configs())
        if (cfg.sc.label == name)
            return &cfg;
    return nullptr;
}

/// Accepts a preset name or a config file path.
inline sim_config resolve_config(const std::string& name_or_path) {
    if (const sim_config* p = find_preset(name_or_path))
        return *p;
    return config_from_kv(parse_kv_file(name_or_path));
}

} // namespace fdxsic
