// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include "config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sgnn::train {

namespace {

auto trim(const std::string& s) -> std::string
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

auto bad_value(const std::string& key, const std::string& value, const char* what)
    -> ParameterError
{
    return ParameterError { "config key '" + key + "': " + what + ", got '" + value
                            + "'" };
}

auto parse_count(const std::string& key, const std::string& value) -> std::size_t
{
    std::size_t out = 0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc {} || ptr != end) {
        throw bad_value(key, value, "expected a non-negative integer");
    }
    return out;
}

auto parse_real(const std::string& key, const std::string& value) -> double
{
    double out = 0.0;
    const auto* end = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(value.data(), end, out);
    if (ec != std::errc {} || ptr != end || !std::isfinite(out)) {
        throw bad_value(key, value, "expected a finite number");
    }
    return out;
}

auto parse_bool(const std::string& key, const std::string& value) -> bool
{
    if (value == "true" || value == "1") {
        return true;
    }
    if (value == "false" || value == "0") {
        return false;
    }
    throw bad_value(key, value, "expected true or false");
}

auto format_real(double v) -> std::string
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

auto to_string(Variant v) -> std::string
{
    switch (v) {
    case Variant::stable_sage:
        return "stable_sage";
    case Variant::stable_gcn:
        return "stable_gcn";
    case Variant::baseline_sage:
        return "baseline_sage";
    case Variant::baseline_gcn:
        return "baseline_gcn";
    }
    return "?";
}

auto parse_variant(const std::string& name) -> Variant
{
    for (Variant v : { Variant::stable_sage, Variant::stable_gcn,
                       Variant::baseline_sage, Variant::baseline_gcn }) {
        if (to_string(v) == name) {
            return v;
        }
    }
    throw ParameterError { "unknown variant '" + name
                           + "' (expected stable_sage, stable_gcn, baseline_sage "
                             "or baseline_gcn)" };
}

auto layer_kind(Variant v) -> gnn::LayerKind
{
    return v == Variant::stable_gcn || v == Variant::baseline_gcn
               ? gnn::LayerKind::gcn
               : gnn::LayerKind::sage_maxpool;
}

auto is_stable(Variant v) -> bool
{
    return v == Variant::stable_sage || v == Variant::stable_gcn;
}

auto default_clusters(Variant v) -> Index
{
    return layer_kind(v) == gnn::LayerKind::gcn ? 8 : 7;
}

void TrainConfig::validate() const
{
    auto fail = [](const std::string& key, const std::string& what) {
        throw ParameterError { "config key '" + key + "': " + what };
    };
    if (epochs < 1) {
        fail("epochs", "must be at least 1");
    }
    if (warmup_epochs > epochs) {
        fail("warmup_epochs", "must not exceed epochs");
    }
    if (batch_size < 2) {
        fail("batch_size", "must be at least 2");
    }
    if (!(lr > 0.0)) {
        fail("lr", "must be positive");
    }
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
        fail("plateau_factor", "must lie in (0, 1)");
    }
    if (clusters < 0) {
        fail("n_l", "must be positive");
    }
    if (hidden < 1) {
        fail("hidden", "must be positive");
    }
    if (pool_layers < 1) {
        fail("pool_layers", "must be at least 1");
    }
    if (baseline_layers < 1) {
        fail("baseline_layers", "must be at least 1");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        fail("dropout", "must lie in [0, 1)");
    }
    try {
        decor.validate();
    } catch (const ParameterError& e) {
        throw ParameterError { std::string { "config: " } + e.what() };
    }
}

void TrainConfig::set(const std::string& key, const std::string& value)
{
    if (key == "variant") {
        try {
            variant = parse_variant(value);
        } catch (const ParameterError&) {
            throw bad_value(key, value, "unknown variant");
        }
    } else if (key == "epochs") {
        epochs = parse_count(key, value);
    } else if (key == "warmup_epochs") {
        warmup_epochs = parse_count(key, value);
    } else if (key == "batch_size") {
        batch_size = parse_count(key, value);
    } else if (key == "lr") {
        lr = parse_real(key, value);
    } else if (key == "plateau_factor") {
        plateau_factor = parse_real(key, value);
    } else if (key == "plateau_patience") {
        plateau_patience = parse_count(key, value);
    } else if (key == "n_l") {
        clusters = static_cast<Index>(parse_count(key, value));
    } else if (key == "hidden") {
        hidden = static_cast<Index>(parse_count(key, value));
    } else if (key == "pool_layers") {
        pool_layers = parse_count(key, value);
    } else if (key == "baseline_layers") {
        baseline_layers = parse_count(key, value);
    } else if (key == "dropout") {
        dropout = parse_real(key, value);
    } else if (key == "seed") {
        std::uint64_t s = 0;
        const auto* end = value.data() + value.size();
        const auto [ptr, ec] = std::from_chars(value.data(), end, s);
        if (ec != std::errc {} || ptr != end) {
            throw bad_value(key, value, "expected an unsigned integer");
        }
        seed = s;
    } else if (key == "decor_epochs") {
        decor.decor_epochs = parse_count(key, value);
    } else if (key == "weight_lr") {
        decor.weight_lr = parse_real(key, value);
    } else if (key == "bandwidth") {
        if (value == "median") {
            decor.bandwidth_rule = cvd::BandwidthRule::median_heuristic;
        } else {
            decor.bandwidth_rule = cvd::BandwidthRule::fixed;
            decor.fixed_bandwidth = parse_real(key, value);
        }
    } else if (key == "bandwidth_floor") {
        decor.bandwidth_floor = parse_real(key, value);
    } else if (key == "record_trajectories") {
        record_trajectories = parse_bool(key, value);
    } else {
        throw ParameterError { "unknown config key '" + key + "'" };
    }
}

auto TrainConfig::keys() const -> std::vector<std::pair<std::string, std::string>>
{
    return {
        { "variant", to_string(variant) },
        { "epochs", std::to_string(epochs) },
        { "warmup_epochs", std::to_string(warmup_epochs) },
        { "batch_size", std::to_string(batch_size) },
        { "lr", format_real(lr) },
        { "plateau_factor", format_real(plateau_factor) },
        { "plateau_patience", std::to_string(plateau_patience) },
        { "n_l", std::to_string(cluster_count()) },
        { "hidden", std::to_string(hidden) },
        { "pool_layers", std::to_string(pool_layers) },
        { "baseline_layers", std::to_string(baseline_layers) },
        { "dropout", format_real(dropout) },
        { "seed", std::to_string(seed) },
        { "decor_epochs", std::to_string(decor.decor_epochs) },
        { "weight_lr", format_real(decor.weight_lr) },
        { "bandwidth", decor.bandwidth_rule == cvd::BandwidthRule::median_heuristic
                           ? std::string { "median" }
                           : format_real(decor.fixed_bandwidth) },
        { "bandwidth_floor", format_real(decor.bandwidth_floor) },
        { "record_trajectories", record_trajectories ? "true" : "false" },
    };
}

auto TrainConfig::to_text() const -> std::string
{
    std::string out;
    for (const auto& [k, v] : keys()) {
        out += k + " = " + v + "\n";
    }
    return out;
}

auto parse_config(const std::string& text) -> TrainConfig
{
    TrainConfig cfg;
    std::istringstream in { text };
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError { "expected 'key = value', got '" + line + "'", number };
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ParseError { "missing key before '='", number };
        }
        try {
            cfg.set(key, value);
        } catch (const ParameterError& e) {
            throw ParseError { e.what(), number };
        }
    }
    cfg.validate();
    return cfg;
}

auto load_config(const std::filesystem::path& path) -> TrainConfig
{
    std::ifstream in { path };
    if (!in) {
        throw IoError { "cannot open config '" + path.string() + "'" };
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace sgnn::train
