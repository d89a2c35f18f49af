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

#pragma once

#include "tensor/matrix.hpp"
#include "tensor/rng.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

namespace sgnn::graph {

enum class MotifKind { house, star, clique, diamond, grid };

// The four label-irrelevant motifs, in the order used for uniform draws.
inline constexpr MotifKind candidate_motifs[] = { MotifKind::star,
                                                  MotifKind::clique,
                                                  MotifKind::diamond,
                                                  MotifKind::grid };

auto to_string(MotifKind kind) -> std::string_view;
auto parse_motif(std::string_view name) -> MotifKind;

struct Edge
{
    std::uint32_t u = 0;
    std::uint32_t v = 0;

    auto operator<=>(const Edge&) const = default;
};

struct MotifFragment
{
    std::size_t node_count = 0;
    std::vector<Edge> edges;
};

struct GraphMeta
{
    MotifKind base = MotifKind::house;
    MotifKind second = MotifKind::star;
    // Cross edges between the two motifs; the first is the fixed bridge.
    std::vector<Edge> bridges;

    auto operator==(const GraphMeta&) const -> bool = default;
};

// Undirected attributed graph. Nodes [0, first motif size) belong to the
// base motif, the rest to the second motif.
struct Graph
{
    std::size_t node_count = 0;
    std::vector<Edge> edges;
    Matrix features;
    int label = 0;
    GraphMeta meta;

    auto operator==(const Graph&) const -> bool = default;
};

enum class Split { train, val, test };

auto to_string(Split split) -> std::string_view;
auto parse_split(std::string_view name) -> Split;

struct Dataset
{
    std::vector<Graph> graphs;
    Split split = Split::train;
    double mu = 0.0;
    std::uint64_t seed = 0;

    auto operator==(const Dataset&) const -> bool = default;
};

inline constexpr Index default_feature_dim = 10;

// Fixed topology of a motif, nodes numbered from 0.
auto make_motif(MotifKind kind) -> MotifFragment;

// Throws ParameterError on out-of-range endpoints, self-loops, duplicate
// edges or a feature matrix whose row count differs from node_count.
void validate(const Graph& g);
auto is_connected(const Graph& g) -> bool;
// Number of distinct 5-node sets whose induced subgraph is a house.
auto count_induced_houses(const Graph& g) -> std::size_t;

// label 1: house plus a second motif that is a star with probability mu and
// otherwise uniform over {clique, diamond, grid}. label 0: base and second
// motif uniform over the four candidates. A bridge joins vertex 0 of each
// motif; every other base-motif vertex gains an edge to a uniform
// second-motif vertex with probability 0.25. Cross edges are redrawn when
// they would change the number of induced houses (one for positives, none
// for negatives).
auto generate_graph(int label, double mu, Rng& rng,
                    Index feature_dim = default_feature_dim) -> Graph;

// Balanced labels (floor/ceil of n/2), graph i drawn from its own derived
// stream so the result depends only on (mu, n_graphs, seed).
auto generate_dataset(double mu, std::size_t n_graphs, std::uint64_t seed,
                      Split split = Split::train,
                      Index feature_dim = default_feature_dim) -> Dataset;

struct DatasetStats
{
    std::size_t graphs = 0;
    std::size_t positives = 0;
    std::size_t positives_with_star = 0;
    double star_rate = 0.0;
    double mean_nodes = 0.0;
};

auto summarize(const Dataset& d) -> DatasetStats;

// Newline-delimited JSON; see README for the record layout.
void save_dataset(const Dataset& d, const std::filesystem::path& path);
auto load_dataset(const std::filesystem::path& path) -> Dataset;

// Padded mini-batch. Each per-graph matrix is stored as one block of a
// vertical stack: adjacency is (batch*max_nodes) x max_nodes, features
// (batch*max_nodes) x feature_dim, mask (batch*max_nodes) x 1, labels
// batch x 1.
struct DenseBatch
{
    Index batch = 0;
    Index max_nodes = 0;
    Index feature_dim = 0;
    Matrix adjacency;
    Matrix features;
    Matrix mask;
    Matrix labels;
};

// Pads to the largest node count (or `min_nodes` when larger). Throws
// ParameterError on an empty list or mismatched feature widths.
auto make_batch(const std::vector<const Graph*>& graphs, Index min_nodes = 0)
    -> DenseBatch;
auto make_batch(const std::vector<Graph>& graphs, Index min_nodes = 0)
    -> DenseBatch;

// Inverse of make_batch on the masked-in region.
auto unbatch(const DenseBatch& b) -> std::vector<Graph>;

} // namespace sgnn::graph
