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

#include "tensor/ops.hpp"

#include <cstddef>
#include <vector>

namespace sgnn::cvd {

enum class BandwidthRule { median_heuristic, fixed };

struct HsicConfig
{
    BandwidthRule bandwidth_rule = BandwidthRule::median_heuristic;
    double fixed_bandwidth = 1.0;
    // Lower clamp of the median heuristic.
    double bandwidth_floor = 1e-8;
    std::size_t decor_epochs = 50;
    double weight_lr = 0.9;

    void validate() const;
};

// Learning rates searched for the sample-weight optimizer.
inline constexpr double weight_lr_grid[] = { 0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3 };

// RBF Gram matrix of the rows of x under the configured bandwidth rule. The
// median heuristic uses the median pairwise distance of x itself and stays
// differentiable through the selected pair.
auto kernel_matrix(Var x, const HsicConfig& config) -> Var;

// (m-1)^-2 tr(K P L P) with RBF kernels K of u and L of v.
// Throws ParameterError when m < 2 or the row counts differ.
auto hsic0(Var u, Var v, const HsicConfig& config) -> Var;
auto hsic0(const Matrix& u, const Matrix& v, const HsicConfig& config) -> double;

// m * softmax(logits) for an m x 1 logit column.
auto simplex_weights(Var logits) -> Var;
auto simplex_weights(const Eigen::VectorXd& logits) -> Eigen::VectorXd;

// hsic0 of the row-reweighted samples w_i u_i and w_i v_i.
auto weighted_hsic(Var u, Var v, Var weights, const HsicConfig& config) -> Var;

// Sum over block pairs i < j of weighted_hsic(block_i, block_j, w), where
// block k is columns [k*d, (k+1)*d) of h. Zero when there is one block.
auto global_objective(Var h, Var weights, Index blocks, const HsicConfig& config)
    -> Var;

// Sum over p != k of weighted_hsic(block_k, block_p, w); k is zero-based.
auto single_treatment_objective(Var h, Index k, Var weights, Index blocks,
                                const HsicConfig& config) -> Var;

// The global objective as a function of the weight logits only, for a fixed
// representation matrix. Block Gram matrices are computed once, so one
// evaluation costs O(blocks * m^2) instead of O(blocks * m^2 * d). Matches
// `global_objective` on a tape (value and gradient).
class DecorrelationObjective
{
public:
    DecorrelationObjective(const Matrix& h, Index blocks, const HsicConfig& config);

    // Objective at `logits`; writes d objective / d logits when grad != null.
    auto evaluate(const Eigen::VectorXd& logits, Eigen::VectorXd* grad) const
        -> double;

    [[nodiscard]] auto samples() const -> Index { return m_; }

private:
    Index m_;
    HsicConfig config_;
    std::vector<Matrix> grams_;
};

} // namespace sgnn::cvd
