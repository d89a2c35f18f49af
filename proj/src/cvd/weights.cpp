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

#include "weights.hpp"

#include <cmath>

namespace sgnn::cvd {

namespace {

constexpr int max_halvings = 20;
constexpr double armijo = 1e-4;

} // namespace

auto learn_weights(const Matrix& h, Index blocks, const HsicConfig& config)
    -> WeightResult
{
    config.validate();
    if (!h.allFinite()) {
        throw NumericError { "learn_weights: representation has non-finite entries" };
    }
    const DecorrelationObjective objective { h, blocks, config };
    Eigen::VectorXd logits = Eigen::VectorXd::Zero(h.rows());
    Eigen::VectorXd grad;
    WeightResult out;
    out.trajectory.reserve(config.decor_epochs + 1);
    double value = objective.evaluate(logits, &grad);
    for (std::size_t step = 0; step < config.decor_epochs; ++step) {
        out.trajectory.push_back(value);
        // The raw gradient shrinks like 1/m, so the step is taken along the
        // gradient rescaled to unit max-norm: weight_lr bounds how far any
        // logit moves. Halve until the objective does not go up.
        const double scale = grad.lpNorm<Eigen::Infinity>();
        if (!(scale > 0.0)) {
            continue;
        }
        const Eigen::VectorXd direction = -grad / scale;
        const double slope = grad.dot(direction);
        double alpha = config.weight_lr;
        bool accepted = false;
        for (int tries = 0; tries < max_halvings; ++tries, alpha *= 0.5) {
            const Eigen::VectorXd trial = logits + alpha * direction;
            Eigen::VectorXd trial_grad;
            const double trial_value = objective.evaluate(trial, &trial_grad);
            if (!std::isfinite(trial_value)) {
                throw NumericError { "learn_weights: objective diverged at step "
                                     + std::to_string(step) };
            }
            if (trial_value <= value + armijo * alpha * slope) {
                logits = trial;
                value = trial_value;
                grad = std::move(trial_grad);
                accepted = true;
                break;
            }
        }
        if (accepted) {
            ++out.steps;
        }
    }
    out.trajectory.push_back(value);
    out.weights = simplex_weights(logits);
    return out;
}

} // namespace sgnn::cvd
