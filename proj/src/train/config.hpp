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

#include "cvd/hsic.hpp"
#include "gnn/layers.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sgnn::train {

enum class Variant { stable_sage, stable_gcn, baseline_sage, baseline_gcn };

auto to_string(Variant v) -> std::string;
auto parse_variant(const std::string& name) -> Variant;
auto layer_kind(Variant v) -> gnn::LayerKind;
auto is_stable(Variant v) -> bool;
// 7 clusters for the SAGE variant, 8 for GCN.
auto default_clusters(Variant v) -> Index;

struct TrainConfig
{
    Variant variant = Variant::stable_sage;
    std::size_t epochs = 50;
    std::size_t warmup_epochs = 20;
    std::size_t batch_size = 250;
    double lr = 1e-3;
    double plateau_factor = 0.5;
    std::size_t plateau_patience = 5;
    // 0 picks default_clusters(variant).
    Index clusters = 0;
    Index hidden = 64;
    std::size_t pool_layers = 3;
    std::size_t baseline_layers = 5;
    double dropout = 0.0;
    cvd::HsicConfig decor {};
    std::uint64_t seed = 1;
    // Keep every per-batch objective trajectory of the weight optimizer.
    bool record_trajectories = false;

    [[nodiscard]] auto cluster_count() const -> Index
    {
        return clusters > 0 ? clusters : default_clusters(variant);
    }
    // Throws ParameterError naming the offending key.
    void validate() const;

    // key = value. Unknown keys and malformed values throw ParameterError
    // with the key name.
    void set(const std::string& key, const std::string& value);
    [[nodiscard]] auto to_text() const -> std::string;
    [[nodiscard]] auto keys() const -> std::vector<std::pair<std::string, std::string>>;
};

// Flat "key = value" text; '#' starts a comment. Errors carry the line number.
auto parse_config(const std::string& text) -> TrainConfig;
auto load_config(const std::filesystem::path& path) -> TrainConfig;

} // namespace sgnn::train
