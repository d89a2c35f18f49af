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

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <string>

namespace sgnn::graph {

auto to_string(MotifKind kind) -> std::string_view
{
    switch (kind) {
    case MotifKind::house:
        return "house";
    case MotifKind::star:
        return "star";
    case MotifKind::clique:
        return "clique";
    case MotifKind::diamond:
        return "diamond";
    case MotifKind::grid:
        return "grid";
    }
    return "unknown";
}

auto parse_motif(std::string_view name) -> MotifKind
{
    for (MotifKind k : { MotifKind::house, MotifKind::star, MotifKind::clique,
                         MotifKind::diamond, MotifKind::grid }) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw ParameterError { "unknown motif '" + std::string(name) + "'" };
}

auto make_motif(MotifKind kind) -> MotifFragment
{
    MotifFragment f;
    switch (kind) {
    case MotifKind::house:
        // 4-cycle 0-1-2-3 with roof apex 4 over the 0-1 side.
        f.node_count = 5;
        f.edges = { { 0, 1 }, { 1, 2 }, { 2, 3 }, { 0, 3 }, { 0, 4 }, { 1, 4 } };
        break;
    case MotifKind::star:
        f.node_count = 6;
        for (std::uint32_t leaf = 1; leaf < 6; ++leaf) {
            f.edges.push_back({ 0, leaf });
        }
        break;
    case MotifKind::clique:
        f.node_count = 5;
        for (std::uint32_t u = 0; u < 5; ++u) {
            for (std::uint32_t v = u + 1; v < 5; ++v) {
                f.edges.push_back({ u, v });
            }
        }
        break;
    case MotifKind::diamond:
        // K4 without the 0-3 edge.
        f.node_count = 4;
        f.edges = { { 0, 1 }, { 0, 2 }, { 1, 2 }, { 1, 3 }, { 2, 3 } };
        break;
    case MotifKind::grid:
        f.node_count = 9;
        for (std::uint32_t r = 0; r < 3; ++r) {
            for (std::uint32_t c = 0; c < 3; ++c) {
                const std::uint32_t id = r * 3 + c;
                if (c + 1 < 3) {
                    f.edges.push_back({ id, id + 1 });
                }
                if (r + 1 < 3) {
                    f.edges.push_back({ id, id + 3 });
                }
            }
        }
        break;
    }
    return f;
}

void validate(const Graph& g)
{
    if (g.node_count == 0) {
        throw ParameterError { "graph has no nodes" };
    }
    std::set<Edge> seen;
    for (const Edge& e : g.edges) {
        if (e.u >= g.node_count || e.v >= g.node_count) {
            throw ParameterError { "edge (" + std::to_string(e.u) + ", "
                                   + std::to_string(e.v)
                                   + ") has an endpoint outside [0, "
                                   + std::to_string(g.node_count) + ")" };
        }
        if (e.u == e.v) {
            throw ParameterError { "self-loop on node " + std::to_string(e.u) };
        }
        const Edge key { std::min(e.u, e.v), std::max(e.u, e.v) };
        if (!seen.insert(key).second) {
            throw ParameterError { "duplicate edge (" + std::to_string(key.u)
                                   + ", " + std::to_string(key.v) + ")" };
        }
    }
    if (static_cast<std::size_t>(g.features.rows()) != g.node_count) {
        throw ParameterError { "feature matrix has "
                               + std::to_string(g.features.rows())
                               + " rows for " + std::to_string(g.node_count)
                               + " nodes" };
    }
    if (g.label != 0 && g.label != 1) {
        throw ParameterError { "label must be 0 or 1" };
    }
}

auto is_connected(const Graph& g) -> bool
{
    if (g.node_count == 0) {
        return false;
    }
    std::vector<std::size_t> parent(g.node_count);
    std::iota(parent.begin(), parent.end(), std::size_t { 0 });
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    std::size_t components = g.node_count;
    for (const Edge& e : g.edges) {
        const std::size_t a = find(e.u);
        const std::size_t b = find(e.v);
        if (a != b) {
            parent[a] = b;
            --components;
        }
    }
    return components == 1;
}

auto count_induced_houses(const Graph& g) -> std::size_t
{
    const std::size_t n = g.node_count;
    if (n < 5) {
        return 0;
    }
    std::vector<std::uint8_t> adj(n * n, 0);
    for (const Edge& e : g.edges) {
        adj[e.u * n + e.v] = 1;
        adj[e.v * n + e.u] = 1;
    }
    const MotifFragment house = make_motif(MotifKind::house);
    std::array<std::array<std::uint8_t, 5>, 5> hadj {};
    for (const Edge& e : house.edges) {
        hadj[e.u][e.v] = 1;
        hadj[e.v][e.u] = 1;
    }
    std::size_t count = 0;
    std::array<std::size_t, 5> pick {};
    // Enumerate 5-subsets in lexicographic order.
    for (std::size_t i = 0; i < 5; ++i) {
        pick[i] = i;
    }
    while (true) {
        int edges = 0;
        for (std::size_t a = 0; a < 5; ++a) {
            for (std::size_t b = a + 1; b < 5; ++b) {
                edges += adj[pick[a] * n + pick[b]];
            }
        }
        if (edges == static_cast<int>(house.edges.size())) {
            std::array<std::size_t, 5> perm { 0, 1, 2, 3, 4 };
            bool found = false;
            do {
                bool ok = true;
                for (std::size_t a = 0; a < 5 && ok; ++a) {
                    for (std::size_t b = a + 1; b < 5 && ok; ++b) {
                        ok = hadj[a][b] == adj[pick[perm[a]] * n + pick[perm[b]]];
                    }
                }
                found = ok;
            } while (!found && std::next_permutation(perm.begin(), perm.end()));
            count += found ? 1 : 0;
        }
        std::size_t k = 5;
        while (k > 0 && pick[k - 1] == n - 5 + (k - 1)) {
            --k;
        }
        if (k == 0) {
            break;
        }
        ++pick[k - 1];
        for (std::size_t j = k; j < 5; ++j) {
            pick[j] = pick[j - 1] + 1;
        }
    }
    return count;
}

} // namespace sgnn::graph
