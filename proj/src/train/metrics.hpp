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

#include <optional>
#include <vector>

namespace sgnn::train {

struct Metrics
{
    double accuracy = 0.0;
    // Positive-class F1; 0 when nothing is predicted positive.
    double f1 = 0.0;
    // Absent when only one class is present.
    std::optional<double> auc;
};

// Rank statistic; tied scores contribute 1/2 per pair.
auto roc_auc(const std::vector<double>& scores, const std::vector<int>& labels)
    -> std::optional<double>;

// Scores are probabilities; predictions use threshold 0.5.
auto compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels)
    -> Metrics;

} // namespace sgnn::train
