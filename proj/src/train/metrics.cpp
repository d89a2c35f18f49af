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

#include "metrics.hpp"

#include "tensor/errors.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace sgnn::train {

namespace {

void check(const std::vector<double>& scores, const std::vector<int>& labels)
{
    if (scores.size() != labels.size()) {
        throw ShapeError { "metrics: " + std::to_string(scores.size()) + " scores for "
                           + std::to_string(labels.size()) + " labels" };
    }
    if (scores.empty()) {
        throw ParameterError { "metrics: empty input" };
    }
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw ParameterError { "metrics: labels must be 0 or 1" };
        }
    }
}

} // namespace

auto roc_auc(const std::vector<double>& scores, const std::vector<int>& labels)
    -> std::optional<double>
{
    check(scores, labels);
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Mid-ranks of tied groups give the 1/2 convention.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) {
            ++j;
        }
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) {
                positive_rank_sum += rank;
            }
        }
        i = j + 1;
    }
    const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const double neg = static_cast<double>(n) - pos;
    if (pos == 0.0 || neg == 0.0) {
        return std::nullopt;
    }
    return (positive_rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

auto compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels)
    -> Metrics
{
    check(scores, labels);
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] >= 0.5 ? 1 : 0;
        correct += pred == labels[i] ? 1 : 0;
        tp += pred == 1 && labels[i] == 1 ? 1 : 0;
        fp += pred == 1 && labels[i] == 0 ? 1 : 0;
        fn += pred == 0 && labels[i] == 1 ? 1 : 0;
    }
    Metrics m;
    m.accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
    m.f1 = tp + fp == 0 ? 0.0
                        : 2.0 * static_cast<double>(tp)
                              / static_cast<double>(2 * tp + fp + fn);
    m.auc = roc_auc(scores, labels);
    return m;
}

} // namespace sgnn::train
