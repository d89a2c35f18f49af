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

#include "graph/graph.hpp"
#include "pooling/diffpool.hpp"
#include "train/config.hpp"

#include <cstdint>

namespace sgnn::train {

struct ModelSpec
{
    Variant variant = Variant::stable_sage;
    Index feature_dim = graph::default_feature_dim;
    Index hidden = 64;
    Index clusters = 7;
    std::size_t pool_layers = 3;
    std::size_t baseline_layers = 5;
    double dropout = 0.0;

    auto operator==(const ModelSpec&) const -> bool = default;
};

auto model_spec(const TrainConfig& config, Index feature_dim) -> ModelSpec;

struct ForwardResult
{
    // Stable variants: the aligned high-level matrix H, batch x (clusters *
    // hidden). Baselines: the mean readout, batch x hidden.
    Var representation;
    // batch x 1
    Var logits;
};

// Stable variants: embedding stack, one DiffPool unit, ordered concatenation
// of the cluster embeddings and a linear head. Baselines: a deeper stack,
// masked mean readout and a linear head.
class Model
{
public:
    Model(const ModelSpec& spec, std::uint64_t seed);

    [[nodiscard]] auto spec() const -> const ModelSpec& { return spec_; }
    [[nodiscard]] auto parameters() const -> const ParameterStore& { return store_; }
    auto parameters() -> ParameterStore& { return store_; }

    // Training mode updates the batch-norm running statistics in place.
    auto forward(Binding& binding, const graph::DenseBatch& batch, bool training,
                 Rng* dropout_rng = nullptr) -> ForwardResult;

private:
    ModelSpec spec_;
    ParameterStore store_;
    gnn::GnnStack stack_;
    pooling::DiffPoolUnit unit_;
    std::size_t head_weight_ = 0;
    std::size_t head_bias_ = 0;
};

} // namespace sgnn::train
