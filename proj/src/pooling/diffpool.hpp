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

#include "gnn/layers.hpp"

#include <vector>

namespace sgnn::pooling {

// One coarsening unit: an embedding stack producing node embeddings Z and a
// pooling stack whose output width is the cluster count.
struct DiffPoolUnit
{
    gnn::GnnStack embed;
    gnn::GnnStack pool;

    [[nodiscard]] auto clusters() const -> Index { return pool.out_dim(); }
    [[nodiscard]] auto dim() const -> Index { return embed.out_dim(); }
};

auto make_unit(ParameterStore& store, const std::string& prefix,
               gnn::LayerKind kind, Index in, Index hidden, Index clusters,
               std::size_t layer_count, Rng& rng) -> DiffPoolUnit;

struct PoolResult
{
    Var assignment;        // (batch*n) x clusters, rows of padding nodes zero
    Var coarse_features;   // (batch*clusters) x d
    Var coarse_adjacency;  // (batch*clusters) x clusters
    Index batch = 0;
    Index clusters = 0;

    // Structure of the coarsened graphs, every cluster valid.
    [[nodiscard]] auto view() const -> gnn::GraphView;
};

// S = row_softmax(pool stack, mask); F' = S^T Z; A' = S^T A S per graph.
auto diffpool(gnn::Context& ctx, const DiffPoolUnit& unit, Var features,
              const gnn::GraphView& g) -> PoolResult;

// Auxiliary DiffPool regularizers (link prediction ||A - S S^T||_F^2 per
// valid entry, plus mean assignment entropy). Not part of the default loss.
auto auxiliary_loss(const PoolResult& r, const gnn::GraphView& g) -> Var;

// Row-ordered concatenation of each graph's cluster embeddings:
// (batch*clusters) x d  ->  batch x (clusters*d). Block k of row i is
// cluster k of graph i.
auto align_concat(Var coarse_features, Index batch, Index clusters) -> Var;

// Stacks per-graph representation rows (1 x k each) into an m x k matrix.
// Throws ShapeError on ragged lengths.
auto stack_batch(const std::vector<Var>& rows) -> Var;

// Columns [k*d, (k+1)*d) of H: the k-th (zero-based) high-level variable.
auto variable_block(Var h, Index k, Index d) -> Var;

} // namespace sgnn::pooling
