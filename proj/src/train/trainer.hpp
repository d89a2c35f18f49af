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

#include "cvd/weights.hpp"
#include "train/metrics.hpp"
#include "train/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace sgnn::train {

class Adam
{
public:
    explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // One update of every trainable parameter that has a gradient.
    void step(ParameterStore& store, const std::vector<Matrix>& grads, double lr);

private:
    double beta1_;
    double beta2_;
    double eps_;
    long steps_ = 0;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
};

// Reduce-on-plateau for a minimised metric. An epoch is an improvement when
// the metric beats the best so far by a relative margin of `threshold`;
// the rate is multiplied by `factor` after more than `patience` epochs
// without one.
class PlateauScheduler
{
public:
    PlateauScheduler(double lr, double factor, std::size_t patience,
                     double threshold = 1e-4);

    // Returns true when the rate was reduced.
    auto step(double metric) -> bool;
    [[nodiscard]] auto lr() const -> double { return lr_; }

private:
    double lr_;
    double factor_;
    std::size_t patience_;
    double threshold_;
    double best_;
    std::size_t bad_epochs_ = 0;
};

// sum_i w_i * BCE(sigmoid(logit_i), y_i)
auto weighted_loss(Var logits, const Matrix& labels, Var weights) -> Var;

struct EpochRecord
{
    std::size_t epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    Metrics val;
    // Mean final objective of the weight optimizer over the epoch's batches;
    // NaN when no weights were learned.
    double mean_hsic = 0.0;
    // Rate used during the epoch.
    double lr = 0.0;
};

struct WeightEvent
{
    std::size_t epoch = 0;
    std::size_t batch = 0;
    std::uint64_t fingerprint_before = 0;
    std::uint64_t fingerprint_after = 0;
    const cvd::WeightResult* result = nullptr;
};

struct TrainHooks
{
    // Called after every weight optimisation with parameter fingerprints
    // taken around it.
    std::function<void(const WeightEvent&)> on_weights;
};

struct TrainResult
{
    Model model;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0; // 1-based
    std::size_t decor_steps = 0;
    std::vector<std::vector<double>> trajectories;
};

auto train(const TrainConfig& config, const graph::Dataset& train_set,
           const graph::Dataset& val_set, const TrainHooks& hooks = {}) -> TrainResult;

// Eval-mode logits in dataset order.
auto predict_logits(Model& model, const graph::Dataset& data,
                    std::size_t batch_size = 250) -> std::vector<double>;
auto evaluate(Model& model, const graph::Dataset& data, std::size_t batch_size = 250)
    -> Metrics;

// epoch,train_loss,val_acc,val_f1,val_auc,mean_hsic,lr
auto history_csv(const std::vector<EpochRecord>& history) -> std::string;
// step,objective per recorded batch
auto trajectory_csv(const std::vector<std::vector<double>>& trajectories)
    -> std::string;

} // namespace sgnn::train
