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

#include "rng.hpp"
#include "tape.hpp"

#include <vector>

// Differentiable primitives. Every op validates shapes (ShapeError naming
// the operand shapes), records its result on the operands' tape and
// registers the matching backward rule.
//
// Batched ("block") ops act on a vertical stack of `batch` equally sized
// blocks, one block per graph: a (batch*n) x c matrix holds the n x c
// matrices of all graphs in order. Masks are (batch*n) x 1 columns of 0/1.
namespace sgnn::ops {

auto matmul(Var a, Var b) -> Var;
auto add(Var a, Var b) -> Var;
auto sub(Var a, Var b) -> Var;
auto hadamard(Var a, Var b) -> Var;
auto scale(Var a, double factor) -> Var;
// a + 1 * row, with row 1 x a.cols().
auto add_row(Var a, Var row) -> Var;
auto transpose(Var a) -> Var;
// Row-major reinterpretation; rows * cols must equal a's size.
auto reshape(Var a, Index rows, Index cols) -> Var;

auto sum(Var a) -> Var;
auto mean(Var a) -> Var;
auto trace(Var a) -> Var;
// sum(a .* b) as a 1x1 node.
auto frobenius_dot(Var a, Var b) -> Var;

auto relu(Var a) -> Var;
// x log x elementwise, with 0 log 0 = 0; entries must be non-negative.
auto xlogx(Var a) -> Var;
auto sigmoid(Var a) -> Var;
auto exp(Var a) -> Var;

auto concat_cols(const std::vector<Var>& parts) -> Var;
auto slice_cols(Var a, Index start, Index count) -> Var;

// Row i multiplied by mask(i).
auto mask_rows(Var a, const Matrix& mask) -> Var;
// Row i multiplied by weights(i); weights is rows x 1 and differentiable.
auto scale_rows(Var a, Var weights) -> Var;

// Softmax over each row, stabilized by max subtraction. With a mask,
// rows whose mask entry is 0 come out exactly zero.
auto row_softmax(Var a) -> Var;
auto row_softmax(Var a, const Matrix& mask) -> Var;

// D(i,j) = ||x_i - x_j||^2, computed from differences so D is exactly
// symmetric with a zero diagonal.
auto pairwise_sq_dists(Var x) -> Var;
// Median of the m(m-1)/2 off-diagonal distances sqrt(D(i,j)), i < j, as a
// 1x1 node. Clamped below at `floor` (no gradient when clamped).
auto median_pairwise_distance(Var sq_dists, double floor) -> Var;
// K(i,j) = exp(-D(i,j) / (2 bandwidth^2)); bandwidth is a 1x1 node.
auto rbf_from_sq_dists(Var sq_dists, Var bandwidth) -> Var;
// Gaussian RBF Gram matrix of the rows of x with a fixed bandwidth.
auto rbf_kernel(Var x, double bandwidth) -> Var;
// Double centering P K P with P = I - 11^T / m.
auto center(Var k) -> Var;

// Per-sample binary cross-entropy of sigmoid(logits) against 0/1 labels.
auto bce_with_logits(Var logits, const Matrix& labels) -> Var;

// Per block: a_i * b_i, or a_i^T * b_i when transpose_a is set.
auto batch_matmul(Var a, Var b, Index batch, bool transpose_a = false) -> Var;
// Transposes every p x q block into a q x p block.
auto batch_transpose(Var a, Index batch) -> Var;
// batch x c matrix of per-block means over masked-in rows (zero when a block
// has no valid rows).
auto masked_block_mean(Var x, const Matrix& mask, Index batch) -> Var;
// Row v of block i becomes the column-wise max of messages over the
// neighbours u != v with adjacency(v, u) > 0; zero when v has none.
auto neighbor_max(Var messages, const Matrix& adjacency, Index batch) -> Var;
// Per block D^-1/2 (A + I_mask) D^-1/2; padding rows and columns stay zero.
auto gcn_normalize(Var adjacency, const Matrix& mask, Index batch) -> Var;

struct BatchNormState
{
    Matrix running_mean;
    Matrix running_var;
};

struct BatchNormOptions
{
    double momentum = 0.9;
    double eps = 1e-5;
    bool training = true;
};

// Batch normalization over masked-in rows. Training mode uses batch
// statistics and folds them into `state` as
// running = momentum * running + (1 - momentum) * batch; eval mode applies
// the running statistics. Masked-out rows are zero in the output.
auto batch_norm(Var x, Var gamma, Var beta, const Matrix& mask,
                BatchNormState& state, const BatchNormOptions& options) -> Var;

// Inverted dropout; identity when rate == 0 or not training.
auto dropout(Var x, double rate, Rng& rng, bool training) -> Var;

} // namespace sgnn::ops
