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

#include "model.hpp"

#include <cmath>

namespace sgnn::train {

auto model_spec(const TrainConfig& config, Index feature_dim) -> ModelSpec
{
    ModelSpec s;
    s.variant = config.variant;
    s.feature_dim = feature_dim;
    s.hidden = config.hidden;
    s.clusters = config.cluster_count();
    s.pool_layers = config.pool_layers;
    s.baseline_layers = config.baseline_layers;
    s.dropout = config.dropout;
    return s;
}

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_ { spec }
{
    if (spec.feature_dim < 1 || spec.hidden < 1 || spec.clusters < 1) {
        throw ParameterError { "model: feature_dim, hidden and clusters must be positive" };
    }
    Rng rng { seed, 1 };
    const auto kind = layer_kind(spec.variant);
    Index head_in = spec.hidden;
    if (is_stable(spec.variant)) {
        stack_ = gnn::make_stack(store_, "embed", kind, spec.feature_dim, spec.hidden,
                                 spec.hidden, spec.pool_layers, rng);
        unit_ = pooling::make_unit(store_, "pool0", kind, spec.hidden, spec.hidden,
                                   spec.clusters, spec.pool_layers, rng);
        head_in = spec.clusters * spec.hidden;
    } else {
        stack_ = gnn::make_stack(store_, "gnn", kind, spec.feature_dim, spec.hidden,
                                 spec.hidden, spec.baseline_layers, rng);
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(head_in + 1));
    Matrix w(head_in, 1);
    for (Index i = 0; i < head_in; ++i) {
        w(i, 0) = rng.uniform(-limit, limit);
    }
    head_weight_ = store_.add("head.weight", std::move(w));
    head_bias_ = store_.add("head.bias", Matrix::Zero(1, 1));
}

auto Model::forward(Binding& binding, const graph::DenseBatch& batch, bool training,
                    Rng* dropout_rng) -> ForwardResult
{
    if (batch.feature_dim != spec_.feature_dim) {
        throw ShapeError { "model expects " + std::to_string(spec_.feature_dim)
                           + " node features, batch has "
                           + std::to_string(batch.feature_dim) };
    }
    Tape& t = binding.tape();
    gnn::Context ctx { binding, store_, training };
    ctx.batch_norm.training = training;
    ctx.dropout = spec_.dropout;
    ctx.dropout_rng = dropout_rng;
    const gnn::GraphView g { t.constant(batch.adjacency), batch.mask, batch.batch };
    Var x = t.constant(batch.features);
    Var h = gnn::gnn_stack(ctx, stack_, x, g);
    Var rep;
    if (is_stable(spec_.variant)) {
        const auto pooled = pooling::diffpool(ctx, unit_, h, g);
        rep = pooling::align_concat(pooled.coarse_features, batch.batch, spec_.clusters);
    } else {
        rep = ops::masked_block_mean(h, batch.mask, batch.batch);
    }
    Var logits = ops::add_row(ops::matmul(rep, binding.var(head_weight_)),
                              binding.var(head_bias_));
    return { rep, logits };
}

} // namespace sgnn::train
