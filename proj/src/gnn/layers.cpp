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

#include "layers.hpp"

#include <cmath>

namespace sgnn::gnn {

namespace {

auto glorot(Index in, Index out, Rng& rng) -> Matrix
{
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    Matrix w(in, out);
    for (Index i = 0; i < w.size(); ++i) {
        w.data()[i] = rng.uniform(-limit, limit);
    }
    return w;
}

auto finish_layer(Context& ctx, const LayerHandles& layer, Var pre, Var h,
                  const GraphView& g) -> Var
{
    Var act = ops::relu(pre);
    ops::BatchNormState state { ctx.store[layer.bn_mean].value,
                                ctx.store[layer.bn_var].value };
    Var out = ops::batch_norm(act, ctx.binding.var(layer.bn_gamma),
                              ctx.binding.var(layer.bn_beta), g.mask, state,
                              ctx.batch_norm);
    if (ctx.batch_norm.training) {
        ctx.store[layer.bn_mean].value = std::move(state.running_mean);
        ctx.store[layer.bn_var].value = std::move(state.running_var);
    }
    if (ctx.dropout > 0.0 && ctx.dropout_rng != nullptr) {
        out = ops::dropout(out, ctx.dropout, *ctx.dropout_rng, ctx.training);
    }
    if (layer.in == layer.out) {
        out = ops::add(out, h);
    }
    return out;
}

void check_input(const LayerHandles& layer, Var h, const GraphView& g)
{
    if (h.cols() != layer.in || h.rows() != g.mask.rows()) {
        throw ShapeError { "layer expects " + std::to_string(layer.in)
                           + " input features over " + std::to_string(g.mask.rows())
                           + " node rows, got " + shape_string(h.value()) };
    }
}

} // namespace

auto to_string(LayerKind kind) -> std::string
{
    return kind == LayerKind::gcn ? "gcn" : "sage";
}

auto parse_layer_kind(const std::string& name) -> LayerKind
{
    if (name == "gcn") {
        return LayerKind::gcn;
    }
    if (name == "sage" || name == "sage_maxpool") {
        return LayerKind::sage_maxpool;
    }
    throw ParameterError { "unknown layer kind '" + name + "'" };
}

auto make_layer(ParameterStore& store, const std::string& prefix, LayerKind kind,
                Index in, Index out, Rng& rng) -> LayerHandles
{
    if (in <= 0 || out <= 0) {
        throw ShapeError { prefix + ": layer widths must be positive" };
    }
    LayerHandles h;
    h.kind = kind;
    h.in = in;
    h.out = out;
    if (kind == LayerKind::sage_maxpool) {
        h.pool_weight = store.add(prefix + ".pool_weight", glorot(in, in, rng));
        h.pool_bias = store.add(prefix + ".pool_bias", Matrix::Zero(1, in));
        h.weight = store.add(prefix + ".weight", glorot(2 * in, out, rng));
    } else {
        h.weight = store.add(prefix + ".weight", glorot(in, out, rng));
    }
    h.bias = store.add(prefix + ".bias", Matrix::Zero(1, out));
    h.bn_gamma = store.add(prefix + ".bn_gamma", Matrix::Ones(1, out));
    h.bn_beta = store.add(prefix + ".bn_beta", Matrix::Zero(1, out));
    h.bn_mean = store.add(prefix + ".bn_mean", Matrix::Zero(1, out), false);
    h.bn_var = store.add(prefix + ".bn_var", Matrix::Ones(1, out), false);
    return h;
}

auto make_stack(ParameterStore& store, const std::string& prefix, LayerKind kind,
                Index in, Index hidden, Index out, std::size_t layer_count,
                Rng& rng) -> GnnStack
{
    if (layer_count == 0) {
        throw ParameterError { prefix + ": a stack needs at least one layer" };
    }
    GnnStack s;
    for (std::size_t l = 0; l < layer_count; ++l) {
        const Index li = l == 0 ? in : hidden;
        const Index lo = l + 1 == layer_count ? out : hidden;
        s.layers.push_back(make_layer(store, prefix + ".layer" + std::to_string(l),
                                      kind, li, lo, rng));
    }
    return s;
}

auto normalize_adjacency(const GraphView& g) -> Var
{
    return ops::gcn_normalize(g.adjacency, g.mask, g.batch);
}

auto gcn_layer(Context& ctx, const LayerHandles& layer, Var a_norm, Var h,
               const GraphView& g) -> Var
{
    check_input(layer, h, g);
    Var hw = ops::matmul(h, ctx.binding.var(layer.weight));
    Var pre = ops::add_row(ops::batch_matmul(a_norm, hw, g.batch),
                           ctx.binding.var(layer.bias));
    return finish_layer(ctx, layer, pre, h, g);
}

auto sage_maxpool_layer(Context& ctx, const LayerHandles& layer, Var h,
                        const GraphView& g) -> Var
{
    check_input(layer, h, g);
    Var transformed = ops::sigmoid(
        ops::add_row(ops::matmul(h, ctx.binding.var(layer.pool_weight)),
                     ctx.binding.var(layer.pool_bias)));
    Var message = ops::neighbor_max(transformed, g.adjacency.value(), g.batch);
    Var pre = ops::add_row(
        ops::matmul(ops::concat_cols({ h, message }), ctx.binding.var(layer.weight)),
        ctx.binding.var(layer.bias));
    return finish_layer(ctx, layer, pre, h, g);
}

auto gnn_stack(Context& ctx, const GnnStack& stack, Var features,
               const GraphView& g) -> Var
{
    if (stack.layers.empty()) {
        throw ParameterError { "gnn_stack: empty stack" };
    }
    Var h = features;
    if (stack.layers.front().kind == LayerKind::gcn) {
        const Var a_norm = normalize_adjacency(g);
        for (const LayerHandles& layer : stack.layers) {
            h = gcn_layer(ctx, layer, a_norm, h, g);
        }
    } else {
        for (const LayerHandles& layer : stack.layers) {
            h = sage_maxpool_layer(ctx, layer, h, g);
        }
    }
    return h;
}

} // namespace sgnn::gnn
