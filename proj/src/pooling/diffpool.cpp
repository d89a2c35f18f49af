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

#include "diffpool.hpp"

#include <string>

namespace sgnn::pooling {

auto make_unit(ParameterStore& store, const std::string& prefix,
               gnn::LayerKind kind, Index in, Index hidden, Index clusters,
               std::size_t layer_count, Rng& rng) -> DiffPoolUnit
{
    DiffPoolUnit u;
    u.embed = gnn::make_stack(store, prefix + ".embed", kind, in, hidden, hidden,
                              layer_count, rng);
    u.pool = gnn::make_stack(store, prefix + ".pool", kind, in, hidden, clusters,
                             layer_count, rng);
    return u;
}

auto PoolResult::view() const -> gnn::GraphView
{
    return gnn::GraphView { coarse_adjacency, Matrix::Ones(batch * clusters, 1),
                            batch };
}

auto diffpool(gnn::Context& ctx, const DiffPoolUnit& unit, Var features,
              const gnn::GraphView& g) -> PoolResult
{
    Var z = gnn::gnn_stack(ctx, unit.embed, features, g);
    Var logits = gnn::gnn_stack(ctx, unit.pool, features, g);
    PoolResult r;
    r.batch = g.batch;
    r.clusters = unit.clusters();
    r.assignment = ops::row_softmax(logits, g.mask);
    r.coarse_features = ops::batch_matmul(r.assignment, z, g.batch, true);
    r.coarse_adjacency = ops::batch_matmul(
        r.assignment, ops::batch_matmul(g.adjacency, r.assignment, g.batch),
        g.batch, true);
    return r;
}

auto auxiliary_loss(const PoolResult& r, const gnn::GraphView& g) -> Var
{
    // Padding rows of S are zero, so S S^T vanishes outside the valid block
    // exactly like A does.
    Var sst = ops::batch_matmul(r.assignment,
                                ops::batch_transpose(r.assignment, g.batch), g.batch);
    Var diff = ops::sub(g.adjacency, sst);
    const Index n = g.mask.rows() / g.batch;
    double valid_entries = 0.0;
    for (Index i = 0; i < g.batch; ++i) {
        const double c = g.mask.middleRows(i * n, n).sum();
        valid_entries += c * c;
    }
    const double nodes = g.mask.sum();
    Var link = ops::scale(ops::frobenius_dot(diff, diff),
                          valid_entries > 0 ? 1.0 / valid_entries : 0.0);
    Var entropy = ops::scale(ops::sum(ops::xlogx(r.assignment)),
                             nodes > 0 ? -1.0 / nodes : 0.0);
    return ops::add(link, entropy);
}

auto align_concat(Var coarse_features, Index batch, Index clusters) -> Var
{
    if (batch <= 0 || coarse_features.rows() != batch * clusters) {
        throw ShapeError { "align_concat: " + shape_string(coarse_features.value())
                           + " is not " + std::to_string(batch) + " blocks of "
                           + std::to_string(clusters) + " clusters" };
    }
    return ops::reshape(coarse_features, batch,
                        clusters * coarse_features.cols());
}

auto stack_batch(const std::vector<Var>& rows) -> Var
{
    if (rows.empty()) {
        throw ShapeError { "stack_batch: no rows" };
    }
    const Index k = rows.front().cols();
    for (const Var& r : rows) {
        if (r.rows() != 1 || r.cols() != k) {
            throw ShapeError { "stack_batch: ragged representation "
                               + shape_string(r.value()) + ", expected 1x"
                               + std::to_string(k) };
        }
    }
    // Rows stack by concatenating the flattened vectors and reshaping.
    return ops::reshape(ops::concat_cols(rows), static_cast<Index>(rows.size()), k);
}

auto variable_block(Var h, Index k, Index d) -> Var
{
    return ops::slice_cols(h, k * d, d);
}

} // namespace sgnn::pooling
