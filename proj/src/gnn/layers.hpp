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

#include "gnn/params.hpp"
#include "tensor/ops.hpp"

#include <string>
#include <vector>

namespace sgnn::gnn {

enum class LayerKind { gcn, sage_maxpool };

auto to_string(LayerKind kind) -> std::string;
auto parse_layer_kind(const std::string& name) -> LayerKind;

// Indices into a ParameterStore. The pool_* entries are only used by the
// GraphSAGE max-pool variant.
struct LayerHandles
{
    LayerKind kind = LayerKind::gcn;
    Index in = 0;
    Index out = 0;
    std::size_t weight = 0;
    std::size_t bias = 0;
    std::size_t pool_weight = 0;
    std::size_t pool_bias = 0;
    std::size_t bn_gamma = 0;
    std::size_t bn_beta = 0;
    std::size_t bn_mean = 0;
    std::size_t bn_var = 0;
};

struct GnnStack
{
    std::vector<LayerHandles> layers;

    [[nodiscard]] auto out_dim() const -> Index { return layers.back().out; }
};

// Glorot-uniform weights, zero biases, unit BN scale.
auto make_layer(ParameterStore& store, const std::string& prefix, LayerKind kind,
                Index in, Index out, Rng& rng) -> LayerHandles;
// in -> hidden -> ... -> out over `layer_count` layers.
auto make_stack(ParameterStore& store, const std::string& prefix, LayerKind kind,
                Index in, Index hidden, Index out, std::size_t layer_count,
                Rng& rng) -> GnnStack;

// Per-forward state shared by every layer.
struct Context
{
    Binding& binding;
    ParameterStore& store;
    bool training = false;
    ops::BatchNormOptions batch_norm {};
    double dropout = 0.0;
    Rng* dropout_rng = nullptr;
};

// Batched graph structure for one level of the hierarchy.
struct GraphView
{
    Var adjacency; // raw (unnormalized) stacked adjacency blocks
    Matrix mask;
    Index batch = 0;
};

auto normalize_adjacency(const GraphView& g) -> Var;

// BN(ReLU(Â h W + b)) + h (residual only when widths match).
auto gcn_layer(Context& ctx, const LayerHandles& layer, Var a_norm, Var h,
               const GraphView& g) -> Var;

// message_v = max_{u in N(v)} sigmoid(h_u W_pool + b_pool), zero for isolated
// nodes; BN(ReLU([h_v, message_v] W + b)) + h (residual when widths match).
auto sage_maxpool_layer(Context& ctx, const LayerHandles& layer, Var h,
                        const GraphView& g) -> Var;

auto gnn_stack(Context& ctx, const GnnStack& stack, Var features,
               const GraphView& g) -> Var;

} // namespace sgnn::gnn
