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

#include "graph.hpp"

#include "tensor/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <string>

namespace sgnn::graph {

namespace {

using nlohmann::json;

constexpr int format_version = 1;

auto edges_to_json(const std::vector<Edge>& edges) -> json
{
    json arr = json::array();
    for (const Edge& e : edges) {
        arr.push_back({ e.u, e.v });
    }
    return arr;
}

auto edges_from_json(const json& arr) -> std::vector<Edge>
{
    std::vector<Edge> edges;
    for (const json& e : arr) {
        if (!e.is_array() || e.size() != 2) {
            throw ParameterError { "edge must be a [u, v] pair" };
        }
        edges.push_back({ e[0].get<std::uint32_t>(), e[1].get<std::uint32_t>() });
    }
    return edges;
}

auto graph_to_json(const Graph& g) -> json
{
    json x = json::array();
    for (Index r = 0; r < g.features.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < g.features.cols(); ++c) {
            row.push_back(g.features(r, c));
        }
        x.push_back(std::move(row));
    }
    return json { { "n", g.node_count },
                  { "edges", edges_to_json(g.edges) },
                  { "x", std::move(x) },
                  { "y", g.label },
                  { "meta",
                    { { "base", to_string(g.meta.base) },
                      { "second", to_string(g.meta.second) },
                      { "bridges", edges_to_json(g.meta.bridges) } } } };
}

auto graph_from_json(const json& j) -> Graph
{
    Graph g;
    g.node_count = j.at("n").get<std::size_t>();
    g.edges = edges_from_json(j.at("edges"));
    const json& x = j.at("x");
    if (!x.is_array() || x.size() != g.node_count) {
        throw ParameterError { "x must hold one row per node" };
    }
    const std::size_t width = g.node_count > 0 ? x[0].size() : 0;
    g.features.resize(static_cast<Index>(g.node_count), static_cast<Index>(width));
    for (std::size_t r = 0; r < g.node_count; ++r) {
        if (!x[r].is_array() || x[r].size() != width) {
            throw ParameterError { "ragged feature row " + std::to_string(r) };
        }
        for (std::size_t c = 0; c < width; ++c) {
            g.features(static_cast<Index>(r), static_cast<Index>(c))
                = x[r][c].get<double>();
        }
    }
    g.label = j.at("y").get<int>();
    const json& meta = j.at("meta");
    g.meta.base = parse_motif(meta.at("base").get<std::string>());
    g.meta.second = parse_motif(meta.at("second").get<std::string>());
    g.meta.bridges = edges_from_json(meta.at("bridges"));
    validate(g);
    return g;
}

} // namespace

void save_dataset(const Dataset& d, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError { "cannot open '" + path.string() + "' for writing" };
    }
    const json header { { "version", format_version },
                        { "mu", d.mu },
                        { "seed", d.seed },
                        { "split", to_string(d.split) },
                        { "count", d.graphs.size() } };
    out << header.dump() << '\n';
    for (const Graph& g : d.graphs) {
        out << graph_to_json(g).dump() << '\n';
    }
    out.flush();
    if (!out) {
        throw IoError { "write to '" + path.string() + "' failed" };
    }
}

auto load_dataset(const std::filesystem::path& path) -> Dataset
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError { "cannot open '" + path.string() + "'" };
    }
    Dataset d;
    std::size_t expected = 0;
    std::size_t line_no = 0;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (in.eof()) {
            // Every record, including the last, ends with a newline.
            throw ParseError { "record is not newline-terminated (truncated file?)",
                               line_no };
        }
        try {
            const json j = json::parse(line);
            if (!have_header) {
                const int version = j.at("version").get<int>();
                if (version != format_version) {
                    throw ParameterError { "unsupported version "
                                           + std::to_string(version) };
                }
                d.mu = j.at("mu").get<double>();
                d.seed = j.at("seed").get<std::uint64_t>();
                d.split = parse_split(j.at("split").get<std::string>());
                expected = j.at("count").get<std::size_t>();
                d.graphs.reserve(expected);
                have_header = true;
            } else {
                d.graphs.push_back(graph_from_json(j));
            }
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError { e.what(), line_no };
        }
    }
    if (!have_header) {
        throw ParseError { "missing header record", 1 };
    }
    if (d.graphs.size() != expected) {
        throw ParseError { "header announces " + std::to_string(expected)
                               + " graphs but file holds "
                               + std::to_string(d.graphs.size()),
                           line_no };
    }
    return d;
}

} // namespace sgnn::graph
