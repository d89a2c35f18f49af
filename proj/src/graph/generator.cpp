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

#include <string>

namespace sgnn::graph {

namespace {

constexpr double cross_edge_probability = 0.25;
constexpr int cross_edge_attempts = 64;

auto draw_candidate(Rng& rng) -> MotifKind
{
    return candidate_motifs[rng.below(std::size(candidate_motifs))];
}

// Second motif of a positive graph: star with probability mu, otherwise one
// of the three remaining candidates.
auto draw_positive_second(double mu, Rng& rng) -> MotifKind
{
    if (rng.bernoulli(mu)) {
        return MotifKind::star;
    }
    constexpr MotifKind rest[] = { MotifKind::clique, MotifKind::diamond,
                                   MotifKind::grid };
    return rest[rng.below(std::size(rest))];
}

} // namespace

auto to_string(Split split) -> std::string_view
{
    switch (split) {
    case Split::train:
        return "train";
    case Split::val:
        return "val";
    case Split::test:
        return "test";
    }
    return "unknown";
}

auto parse_split(std::string_view name) -> Split
{
    for (Split s : { Split::train, Split::val, Split::test }) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ParameterError { "unknown split '" + std::string(name) + "'" };
}

auto generate_graph(int label, double mu, Rng& rng, Index feature_dim) -> Graph
{
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw ParameterError { "mu must lie in [0, 1], got " + std::to_string(mu) };
    }
    if (label != 0 && label != 1) {
        throw ParameterError { "label must be 0 or 1" };
    }
    if (feature_dim <= 0) {
        throw ParameterError { "feature dimension must be positive" };
    }
    Graph g;
    g.label = label;
    if (label == 1) {
        g.meta.base = MotifKind::house;
        g.meta.second = draw_positive_second(mu, rng);
    } else {
        g.meta.base = draw_candidate(rng);
        g.meta.second = draw_candidate(rng);
    }
    const MotifFragment first = make_motif(g.meta.base);
    const MotifFragment second = make_motif(g.meta.second);
    const auto offset = static_cast<std::uint32_t>(first.node_count);
    g.node_count = first.node_count + second.node_count;
    std::vector<Edge> motif_edges = first.edges;
    for (const Edge& e : second.edges) {
        motif_edges.push_back({ e.u + offset, e.v + offset });
    }

    const std::size_t wanted_houses = label == 1 ? 1 : 0;
    const Edge bridge { 0, offset };
    std::vector<Edge> cross;
    for (int attempt = 0; attempt < cross_edge_attempts; ++attempt) {
        cross.assign(1, bridge);
        for (std::uint32_t v = 1; v < offset; ++v) {
            if (rng.bernoulli(cross_edge_probability)) {
                const auto target = static_cast<std::uint32_t>(
                    rng.below(second.node_count));
                cross.push_back({ v, offset + target });
            }
        }
        g.edges = motif_edges;
        g.edges.insert(g.edges.end(), cross.begin(), cross.end());
        if (count_induced_houses(g) == wanted_houses) {
            break;
        }
        // The bridge alone lies on no cycle, so it can never add a house.
        cross.assign(1, bridge);
        g.edges = motif_edges;
        g.edges.push_back(bridge);
    }
    g.meta.bridges = cross;

    g.features.resize(static_cast<Index>(g.node_count), feature_dim);
    for (Index i = 0; i < g.features.size(); ++i) {
        g.features.data()[i] = rng.uniform();
    }
    return g;
}

auto generate_dataset(double mu, std::size_t n_graphs, std::uint64_t seed,
                      Split split, Index feature_dim) -> Dataset
{
    if (n_graphs < 2) {
        throw ParameterError { "a dataset needs at least 2 graphs" };
    }
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw ParameterError { "mu must lie in [0, 1], got " + std::to_string(mu) };
    }
    const Rng root { seed };
    std::vector<int> labels(n_graphs);
    for (std::size_t i = 0; i < n_graphs; ++i) {
        labels[i] = static_cast<int>(i % 2);
    }
    Rng shuffle = root.split(0);
    for (std::size_t i = n_graphs - 1; i > 0; --i) {
        std::swap(labels[i], labels[shuffle.below(i + 1)]);
    }
    Dataset d;
    d.split = split;
    d.mu = mu;
    d.seed = seed;
    d.graphs.resize(n_graphs);
    for (std::size_t i = 0; i < n_graphs; ++i) {
        Rng rng = root.split(i + 1);
        d.graphs[i] = generate_graph(labels[i], mu, rng, feature_dim);
    }
    return d;
}

auto summarize(const Dataset& d) -> DatasetStats
{
    DatasetStats s;
    s.graphs = d.graphs.size();
    double nodes = 0.0;
    for (const Graph& g : d.graphs) {
        nodes += static_cast<double>(g.node_count);
        if (g.label == 1) {
            ++s.positives;
            if (g.meta.second == MotifKind::star) {
                ++s.positives_with_star;
            }
        }
    }
    s.mean_nodes = s.graphs > 0 ? nodes / static_cast<double>(s.graphs) : 0.0;
    s.star_rate = s.positives > 0 ? static_cast<double>(s.positives_with_star)
                                        / static_cast<double>(s.positives)
                                  : 0.0;
    return s;
}

} // namespace sgnn::graph
