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

namespace sgnn::graph {

auto make_batch(const std::vector<const Graph*>& graphs, Index min_nodes)
    -> DenseBatch
{
    if (graphs.empty()) {
        throw ParameterError { "make_batch: empty graph list" };
    }
    DenseBatch b;
    b.batch = static_cast<Index>(graphs.size());
    b.feature_dim = graphs.front()->features.cols();
    b.max_nodes = min_nodes;
    for (const Graph* g : graphs) {
        if (g->features.cols() != b.feature_dim) {
            throw ParameterError { "make_batch: mixed feature widths" };
        }
        b.max_nodes = std::max(b.max_nodes, static_cast<Index>(g->node_count));
    }
    const Index n = b.max_nodes;
    b.adjacency = Matrix::Zero(b.batch * n, n);
    b.features = Matrix::Zero(b.batch * n, b.feature_dim);
    b.mask = Matrix::Zero(b.batch * n, 1);
    b.labels = Matrix::Zero(b.batch, 1);
    for (Index i = 0; i < b.batch; ++i) {
        const Graph& g = *graphs[static_cast<std::size_t>(i)];
        const auto nodes = static_cast<Index>(g.node_count);
        for (const Edge& e : g.edges) {
            b.adjacency(i * n + e.u, e.v) = 1.0;
            b.adjacency(i * n + e.v, e.u) = 1.0;
        }
        b.features.middleRows(i * n, nodes) = g.features;
        b.mask.middleRows(i * n, nodes).setOnes();
        b.labels(i, 0) = static_cast<double>(g.label);
    }
    return b;
}

auto make_batch(const std::vector<Graph>& graphs, Index min_nodes) -> DenseBatch
{
    std::vector<const Graph*> ptrs;
    ptrs.reserve(graphs.size());
    for (const Graph& g : graphs) {
        ptrs.push_back(&g);
    }
    return make_batch(ptrs, min_nodes);
}

auto unbatch(const DenseBatch& b) -> std::vector<Graph>
{
    std::vector<Graph> out(static_cast<std::size_t>(b.batch));
    const Index n = b.max_nodes;
    for (Index i = 0; i < b.batch; ++i) {
        Graph& g = out[static_cast<std::size_t>(i)];
        Index nodes = 0;
        while (nodes < n && b.mask(i * n + nodes, 0) != 0.0) {
            ++nodes;
        }
        g.node_count = static_cast<std::size_t>(nodes);
        g.features = b.features.middleRows(i * n, nodes);
        g.label = static_cast<int>(b.labels(i, 0));
        for (Index u = 0; u < nodes; ++u) {
            for (Index v = u + 1; v < nodes; ++v) {
                if (b.adjacency(i * n + u, v) != 0.0) {
                    g.edges.push_back({ static_cast<std::uint32_t>(u),
                                        static_cast<std::uint32_t>(v) });
                }
            }
        }
    }
    return out;
}

} // namespace sgnn::graph
