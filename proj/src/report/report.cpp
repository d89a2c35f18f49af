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

#include "report.hpp"

#include "tensor/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

namespace sgnn::report {

namespace {

using nlohmann::json;

constexpr const char* metric_names[] = { "accuracy", "f1", "auc" };

struct Stat
{
    double mean = 0.0;
    std::optional<double> stderr_;
};

struct Entry
{
    std::string variant;
    std::string test_digest;
    std::optional<Stat> metrics[3];
};

struct Row
{
    double mu = 0.0;
    std::string backbone;
    std::optional<Entry> baseline;
    std::optional<Entry> stable;
};

[[noreturn]] void schema(std::size_t index, const std::string& what)
{
    throw ParameterError { "manifest " + std::to_string(index + 1) + ": " + what };
}

auto parse_entry(const std::string& text, std::size_t index, double& mu,
                 std::string& backbone, bool& stable) -> Entry
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError { "manifest " + std::to_string(index + 1) + ": " + e.what() };
    }
    if (!j.is_object() || j.value("schema", "") != "stablegnn-run"
        || j.value("version", 0) != 1) {
        schema(index, "not a version 1 run manifest");
    }
    try {
        Entry e;
        e.variant = j.at("variant").get<std::string>();
        const auto us = e.variant.find('_');
        if (us == std::string::npos) {
            schema(index, "unknown variant '" + e.variant + "'");
        }
        const std::string family = e.variant.substr(0, us);
        if (family != "stable" && family != "baseline") {
            schema(index, "unknown variant '" + e.variant + "'");
        }
        stable = family == "stable";
        backbone = e.variant.substr(us + 1);
        mu = j.at("datasets").at("train").at("mu").get<double>();
        if (!j.contains("aggregate") || !j["datasets"].contains("test")) {
            schema(index, "no test metrics (run without a test set)");
        }
        e.test_digest = j["datasets"]["test"].at("fnv1a64").get<std::string>();
        for (int k = 0; k < 3; ++k) {
            const json& a = j["aggregate"].at(metric_names[k]);
            if (a.is_null()) {
                continue;
            }
            Stat s;
            s.mean = a.at("mean").get<double>();
            if (!a.at("stderr").is_null()) {
                s.stderr_ = a["stderr"].get<double>();
            }
            e.metrics[k] = s;
        }
        return e;
    } catch (const json::exception& ex) {
        schema(index, std::string { "missing or mistyped field: " } + ex.what());
    }
}

auto fixed(double v, int digits) -> std::string
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

auto pct(const Stat& s) -> std::string
{
    return fixed(100.0 * s.mean, 2)
           + (s.stderr_ ? " ± " + fixed(100.0 * *s.stderr_, 2) : std::string {});
}

} // namespace

auto build_report(const std::vector<std::string>& manifests) -> Table
{
    if (manifests.empty()) {
        throw ParameterError { "report needs at least one manifest" };
    }
    std::map<std::pair<double, std::string>, Row> rows;
    for (std::size_t i = 0; i < manifests.size(); ++i) {
        double mu = 0.0;
        std::string backbone;
        bool stable = false;
        Entry e = parse_entry(manifests[i], i, mu, backbone, stable);
        Row& row = rows[{ mu, backbone }];
        row.mu = mu;
        row.backbone = backbone;
        auto& slot = stable ? row.stable : row.baseline;
        if (slot) {
            schema(i, "duplicate " + e.variant + " run for mu " + fixed(mu, 2));
        }
        const auto& other = stable ? row.baseline : row.stable;
        if (other && other->test_digest != e.test_digest) {
            schema(i, "evaluated on a different test set than its counterpart");
        }
        slot = std::move(e);
    }
    const bool compare = std::any_of(rows.begin(), rows.end(), [](const auto& kv) {
        return kv.second.baseline && kv.second.stable;
    });

    std::vector<std::string> header { "mu", "backbone" };
    for (const char* m : metric_names) {
        const std::string name = m;
        for (const char* side : { "baseline", "stable" }) {
            header.push_back(std::string { side } + "_" + name + "_mean");
            header.push_back(std::string { side } + "_" + name + "_stderr");
        }
        if (compare) {
            header.push_back(name + "_improvement_pct");
        }
    }
    std::vector<std::string> text_header { "mu", "backbone" };
    for (const char* m : metric_names) {
        text_header.push_back(std::string { "baseline " } + m);
        text_header.push_back(std::string { "stable " } + m);
        if (compare) {
            text_header.push_back(std::string { m } + " impr %");
        }
    }

    std::vector<std::vector<std::string>> csv_rows;
    std::vector<std::vector<std::string>> text_rows;
    for (const auto& [key, row] : rows) {
        std::vector<std::string> c { fixed(row.mu, 2), row.backbone };
        std::vector<std::string> t { fixed(row.mu, 2), row.backbone };
        for (int k = 0; k < 3; ++k) {
            const std::optional<Stat> base = row.baseline ? row.baseline->metrics[k] : std::nullopt;
            const std::optional<Stat> stab = row.stable ? row.stable->metrics[k] : std::nullopt;
            for (const auto& s : { base, stab }) {
                c.push_back(s ? fixed(s->mean, 6) : "");
                c.push_back(s && s->stderr_ ? fixed(*s->stderr_, 6) : "");
                t.push_back(s ? pct(*s) : "-");
            }
            if (compare) {
                std::string impr;
                if (base && stab && base->mean != 0.0) {
                    impr = fixed((stab->mean - base->mean) / base->mean * 100.0, 2);
                }
                c.push_back(impr);
                t.push_back(impr.empty() ? "-" : impr);
            }
        }
        csv_rows.push_back(std::move(c));
        text_rows.push_back(std::move(t));
    }

    Table out;
    auto join = [](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            s += (i ? "," : "") + cells[i];
        }
        return s + "\n";
    };
    out.csv = join(header);
    for (const auto& r : csv_rows) {
        out.csv += join(r);
    }
    // Width in code points so the ± sign does not skew alignment.
    auto width = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(
            s.begin(), s.end(), [](char ch) { return (ch & 0xC0) != 0x80; }));
    };
    std::vector<std::size_t> widths(text_header.size());
    for (std::size_t i = 0; i < text_header.size(); ++i) {
        widths[i] = width(text_header[i]);
        for (const auto& r : text_rows) {
            widths[i] = std::max(widths[i], width(r[i]));
        }
    }
    auto line = [&](const std::vector<std::string>& cells) {
        std::string s;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) {
                s += "  ";
            }
            s += cells[i];
            if (i + 1 < cells.size()) {
                s += std::string(widths[i] - width(cells[i]), ' ');
            }
        }
        return s + "\n";
    };
    out.text = line(text_header);
    for (const auto& r : text_rows) {
        out.text += line(r);
    }
    return out;
}

} // namespace sgnn::report
