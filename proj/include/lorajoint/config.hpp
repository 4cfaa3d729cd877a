/*
 * Copyright 2026 The lorajoint Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <locale>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "lorajoint/feasibility.hpp"
#include "lorajoint/harness.hpp"

namespace lorajoint {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fully resolved run settings.
struct RunConfig {
    ExperimentSpec spec;
    /// Restricts the power-controlled schemes to one approximation.
    std::optional<SystemKind> approx;
    std::string out_dir = "out";
    std::size_t workers = 1;
    std::size_t quota_trials = 10000;
    /// Largest tolerated fraction of solver failures in any (scheme, N) cell.
    double failure_budget = 0.05;
    int verbosity = 0;

    std::vector<Scheme> effective_schemes() const
    {
        std::vector<Scheme> out;
        for (Scheme s : spec.schemes) {
            if (approx && s == Scheme::prop_sf_linear && *approx != SystemKind::linear)
                continue;
            if (approx && s == Scheme::prop_sf_quadratic && *approx != SystemKind::quadratic)
                continue;
            out.push_back(s);
        }
        return out;
    }
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text)
{
    T value{};
    const auto t = trim(text);
    if constexpr (std::is_floating_point_v<T>) {
        // from_chars for double is missing from older standard libraries.
        std::istringstream is(t);
        is.imbue(std::locale::classic());
        if (t.empty() || !(is >> value) || !is.eof())
            throw ConfigError(std::string(key) + ": not a number: '" + t + "'");
    } else {
        const auto* first = t.data();
        const auto* last = t.data() + t.size();
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (t.empty() || ec != std::errc{} || ptr != last)
            throw ConfigError(std::string(key) + ": not an integer: '" + t + "'");
    }
    return value;
}

}  // namespace detail

inline std::string format_number(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline Quotas parse_quotas(std::string_view text)
{
    const auto parts = detail::split(text, ',');
    if (parts.size() != static_cast<std::size_t>(kNumSf))
        throw ConfigError("quotas: expected 6 comma-separated values");
    Quotas q{};
    for (std::size_t k = 0; k < parts.size(); ++k) {
        q[k] = detail::parse_number<int>("quotas", parts[k]);
        if (q[k] < 1)
            throw ConfigError("quotas: every SF quota must be at least 1");
    }
    return q;
}

/// "A:B" inclusive, or a single value.
inline std::vector<std::size_t> parse_n_range(std::string_view text)
{
    const auto parts = detail::split(text, ':');
    if (parts.size() > 2)
        throw ConfigError("n_range: expected A:B");
    const auto a = detail::parse_number<std::size_t>("n_range", parts.front());
    const auto b = detail::parse_number<std::size_t>("n_range", parts.back());
    if (a < 2 || b < a)
        throw ConfigError("n_range: need 2 <= A <= B");
    std::vector<std::size_t> out;
    for (std::size_t n = a; n <= b; ++n)
        out.push_back(n);
    return out;
}

inline std::vector<Scheme> parse_schemes(std::string_view text)
{
    std::vector<Scheme> out;
    if (detail::trim(text) == "all")
        return {kAllSchemes.begin(), kAllSchemes.end()};
    for (const auto& name : detail::split(text, ',')) {
        const auto s = parse_scheme(name);
        if (!s)
            throw ConfigError("unknown scheme '" + name + "'");
        out.push_back(*s);
    }
    return out;
}

inline SystemKind parse_approx(std::string_view text)
{
    const auto t = detail::trim(text);
    if (t == "linear")
        return SystemKind::linear;
    if (t == "quadratic")
        return SystemKind::quadratic;
    throw ConfigError("approx: expected linear or quadratic");
}

/// Applies one key=value setting.
inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value)
{
    auto& s = cfg.spec;
    auto& ch = s.channel;
    using detail::parse_number;
    if (key == "scheme" || key == "schemes")
        s.schemes = parse_schemes(value);
    else if (key == "n_range")
        s.n_values = parse_n_range(value);
    else if (key == "trials")
        s.trials = parse_number<std::size_t>(key, value);
    else if (key == "seed")
        s.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "quotas")
        s.quotas = parse_quotas(value);
    else if (key == "epsilon")
        s.epsilon = parse_number<double>(key, value);
    else if (key == "joint_iterations")
        s.joint_iterations = parse_number<std::size_t>(key, value);
    else if (key == "approx")
        cfg.approx = parse_approx(value);
    else if (key == "out")
        cfg.out_dir = detail::trim(value);
    else if (key == "workers")
        cfg.workers = parse_number<std::size_t>(key, value);
    else if (key == "quota_trials")
        cfg.quota_trials = parse_number<std::size_t>(key, value);
    else if (key == "failure_budget")
        cfg.failure_budget = parse_number<double>(key, value);
    else if (key == "verbosity")
        cfg.verbosity = parse_number<int>(key, value);
    else if (key == "carrier_freq_mhz")
        ch.carrier_freq_mhz = parse_number<double>(key, value);
    else if (key == "bandwidth_hz")
        ch.bandwidth_hz = parse_number<double>(key, value);
    else if (key == "noise_figure_db")
        ch.noise_figure_db = parse_number<double>(key, value);
    else if (key == "path_loss_exponent")
        ch.path_loss_exponent = parse_number<double>(key, value);
    else if (key == "cell_radius_m")
        ch.cell_radius_m = parse_number<double>(key, value);
    else if (key == "p_max_dbm")
        ch.p_max_dbm = parse_number<double>(key, value);
    else if (key == "coding_rate_x")
        ch.coding_rate_x = parse_number<int>(key, value);
    else
        throw ConfigError("unknown setting '" + std::string(key) + "'");
}

/// Reads `key = value` lines; '#' starts a comment.
inline void load_config(RunConfig& cfg, std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto t = detail::trim(line);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        try {
            apply_setting(cfg, detail::trim(std::string_view(t).substr(0, eq)),
                          std::string_view(t).substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    load_config(cfg, in);
}

inline void validate(const RunConfig& cfg)
{
    try {
        cfg.spec.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (cfg.workers < 1)
        throw ConfigError("workers must be at least 1");
    if (!(cfg.failure_budget >= 0.0 && cfg.failure_budget <= 1.0))
        throw ConfigError("failure_budget must lie in [0, 1]");
    if (cfg.effective_schemes().empty())
        throw ConfigError("no scheme left after applying approx");
}

/// Effective settings in a fixed order, for output headers.
inline std::vector<std::pair<std::string, std::string>> effective_settings(const RunConfig& cfg)
{
    const auto& s = cfg.spec;
    const auto& ch = s.channel;
    std::string schemes;
    for (Scheme sc : cfg.effective_schemes())
        schemes += (schemes.empty() ? "" : ",") + std::string(scheme_name(sc));
    std::string quotas;
    for (int q : s.quotas)
        quotas += (quotas.empty() ? "" : ",") + std::to_string(q);
    const std::string n_range = std::to_string(s.n_values.front()) + ":" + std::to_string(s.n_values.back());
    return {
        {"schemes", schemes},
        {"n_range", n_range},
        {"trials", std::to_string(s.trials)},
        {"seed", std::to_string(s.seed)},
        {"quotas", quotas},
        {"epsilon", format_number(s.epsilon)},
        {"joint_iterations", std::to_string(s.joint_iterations)},
        {"failure_budget", format_number(cfg.failure_budget)},
        {"approx", cfg.approx ? (*cfg.approx == SystemKind::linear ? "linear" : "quadratic") : "both"},
        {"carrier_freq_mhz", format_number(ch.carrier_freq_mhz)},
        {"bandwidth_hz", format_number(ch.bandwidth_hz)},
        {"noise_figure_db", format_number(ch.noise_figure_db)},
        {"path_loss_exponent", format_number(ch.path_loss_exponent)},
        {"cell_radius_m", format_number(ch.cell_radius_m)},
        {"p_max_dbm", format_number(ch.p_max_dbm)},
        {"coding_rate_x", std::to_string(ch.coding_rate_x)},
    };
}

}  // namespace lorajoint
