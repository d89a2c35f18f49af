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

#include "hsic.hpp"

#include <vector>

namespace sgnn::cvd {

struct WeightResult
{
    // m x 1, positive, sums to m.
    Matrix weights;
    // Objective before each step and after the last one (decor_epochs + 1 values).
    std::vector<double> trajectory;
    std::size_t steps = 0;
};

// Gradient descent on the softmax logits of the sample weights, starting from
// uniform weights, minimising the global objective of the fixed
// representation h split into `blocks` column blocks.
auto learn_weights(const Matrix& h, Index blocks, const HsicConfig& config)
    -> WeightResult;

} // namespace sgnn::cvd
