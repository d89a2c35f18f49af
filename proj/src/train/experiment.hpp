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

#include "train/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sgnn::train {

struct ExperimentOptions
{
    TrainConfig config;
    std::filesystem::path train_path;
    std::filesystem::path val_path;
    // Optional held-out set; per-seed test metrics need it.
    std::filesystem::path test_path;
    std::filesystem::path out_dir;
    // Run k uses seed config.seed + k.
    std::size_t runs = 1;
    std::size_t jobs = 1;
};

struct RunRecord
{
    std::uint64_t seed = 0;
    std::size_t best_epoch = 0;
    std::size_t decor_steps = 0;
    // Validation metrics of the restored (best) epoch.
    Metrics val;
    std::optional<Metrics> test;
};

struct Summary
{
    double mean = 0.0;
    // Sample standard deviation over sqrt(n); absent for n < 2.
    std::optional<double> stderr_;
    std::size_t n = 0;
};

auto summarize(const std::vector<double>& values) -> Summary;

struct ExperimentResult
{
    std::vector<RunRecord> runs;
    std::string manifest; // JSON text, also written to out_dir/manifest.json
};

// Trains every seed, writing out_dir/seed-<s>/{model.txt, history.csv} (and
// trajectory.csv when trajectories are recorded) plus out_dir/manifest.json.
auto run_experiment(const ExperimentOptions& options) -> ExperimentResult;

// FNV-1a 64 of the file bytes, as 16 hex digits.
auto file_digest(const std::filesystem::path& path) -> std::string;

} // namespace sgnn::train
