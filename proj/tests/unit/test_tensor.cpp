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

#include "support.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <set>

namespace sgnn {
namespace {

using testing::gradient_check;
using testing::random_matrix;

// Scalarizes an op output with a fixed random projection so the check covers
// the whole Jacobian.
auto project(Var out, std::uint64_t seed = 99) -> Var
{
    Rng rng { seed };
    Tape& t = *out.tape();
    return ops::frobenius_dot(out, t.constant(random_matrix(out.rows(), out.cols(), rng)));
}

TEST(Rng, SameSeedSameStream)
{
    Rng a { 42 };
    Rng b { 42 };
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.next_u64(), b.next_u64());
    }
}

TEST(Rng, SplitStreamsDiffer)
{
    const Rng root { 7 };
    Rng a = root.split(1);
    Rng b = root.split(2);
    int equal = 0;
    for (int i = 0; i < 64; ++i) {
        equal += a.next_u64() == b.next_u64() ? 1 : 0;
    }
    EXPECT_EQ(equal, 0);
}

TEST(Rng, UniformInUnitInterval)
{
    Rng r { 3 };
    double total = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        total += u;
    }
    EXPECT_NEAR(total / 20000.0, 0.5, 0.01);
}

TEST(Rng, BelowCoversRange)
{
    Rng r { 5 };
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 500; ++i) {
        const auto x = r.below(7);
        ASSERT_LT(x, 7U);
        seen.insert(x);
    }
    EXPECT_EQ(seen.size(), 7U);
}

TEST(Tape, MatmulForwardValue)
{
    Tape t;
    Matrix a(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    Matrix b(3, 1);
    b << 1, 0, -1;
    const Matrix out = ops::matmul(t.constant(a), t.constant(b)).value();
    EXPECT_DOUBLE_EQ(out(0, 0), -2.0);
    EXPECT_DOUBLE_EQ(out(1, 0), -2.0);
}

TEST(Tape, MatmulShapeMismatchThrows)
{
    Tape t;
    EXPECT_THROW(ops::matmul(t.constant(Matrix::Zero(2, 3)), t.constant(Matrix::Zero(2, 3))),
                 ShapeError);
}

TEST(Tape, BackwardTwiceThrows)
{
    Tape t;
    Var x = t.variable(Matrix::Ones(1, 1));
    Var y = ops::scale(x, 2.0);
    t.backward(y);
    EXPECT_THROW(t.backward(y), ParameterError);
}

TEST(Tape, NonScalarLossThrows)
{
    Tape t;
    Var x = t.variable(Matrix::Ones(2, 1));
    EXPECT_THROW(t.backward(x), ShapeError);
}

TEST(Tape, NonFiniteValueThrows)
{
    Tape t;
    Var x = t.variable(Matrix::Constant(1, 1, 800.0));
    EXPECT_THROW(ops::exp(x), NumericError);
}

TEST(Tape, UnreachedGradientIsZero)
{
    Tape t;
    Var x = t.variable(Matrix::Ones(2, 2));
    Var y = t.variable(Matrix::Ones(1, 1));
    t.backward(ops::scale(y, 3.0));
    EXPECT_TRUE(t.grad(x).isZero());
    EXPECT_DOUBLE_EQ(t.grad(y)(0, 0), 3.0);
}

TEST(Tape, ConstantsReceiveNoGradient)
{
    Tape t;
    Var c = t.constant(Matrix::Ones(1, 1));
    Var x = t.variable(Matrix::Ones(1, 1));
    Var y = ops::hadamard(c, x);
    EXPECT_FALSE(t.requires_grad(c));
    EXPECT_TRUE(t.requires_grad(y));
    t.backward(y);
    EXPECT_TRUE(t.grad(c).isZero());
}

TEST(Tape, SharedSubexpressionAccumulates)
{
    Tape t;
    Var x = t.variable(Matrix::Constant(1, 1, 3.0));
    Var y = ops::hadamard(x, x); // x^2
    t.backward(ops::add(y, x));
    EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 7.0);
}

TEST(Ops, MatmulAssociativity)
{
    Rng rng { 11 };
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(4, 5, rng);
        const Matrix b = random_matrix(5, 3, rng);
        const Matrix c = random_matrix(3, 6, rng);
        Tape t;
        const Matrix left = ops::matmul(ops::matmul(t.constant(a), t.constant(b)), t.constant(c)).value();
        const Matrix right = ops::matmul(t.constant(a), ops::matmul(t.constant(b), t.constant(c))).value();
        EXPECT_LT((left - right).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Ops, TraceAndFrobenius)
{
    Tape t;
    Matrix a(2, 2);
    a << 1, 2, 3, 4;
    EXPECT_DOUBLE_EQ(ops::trace(t.constant(a)).value()(0, 0), 5.0);
    EXPECT_DOUBLE_EQ(ops::frobenius_dot(t.constant(a), t.constant(a)).value()(0, 0), 30.0);
    EXPECT_THROW(ops::trace(t.constant(Matrix::Zero(2, 3))), ShapeError);
}

TEST(Ops, RowSoftmaxRowsSumToOne)
{
    Rng rng { 2 };
    Tape t;
    const Matrix s = ops::row_softmax(t.constant(random_matrix(5, 4, rng, -30, 30))).value();
    for (Index i = 0; i < 5; ++i) {
        EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-12);
    }
}

TEST(Ops, MaskedSoftmaxZeroesPadding)
{
    Rng rng { 2 };
    Tape t;
    Matrix mask(3, 1);
    mask << 1, 0, 1;
    const Matrix s = ops::row_softmax(t.constant(random_matrix(3, 4, rng)), mask).value();
    EXPECT_TRUE(s.row(1).isZero());
    EXPECT_NEAR(s.row(2).sum(), 1.0, 1e-12);
}

TEST(Ops, BceMatchesClosedForm)
{
    Tape t;
    Matrix z(2, 1);
    z << 0.0, 0.0;
    Matrix y(2, 1);
    y << 0.0, 1.0;
    const Matrix l = ops::bce_with_logits(t.constant(z), y).value();
    EXPECT_NEAR(l.sum(), 2.0 * std::log(2.0), 1e-15);
}

TEST(Ops, DropoutIdentityAtRateZero)
{
    Rng rng { 1 };
    Tape t;
    const Matrix x = random_matrix(3, 3, rng);
    Rng d { 4 };
    EXPECT_EQ(ops::dropout(t.constant(x), 0.0, d, true).value(), x);
    EXPECT_EQ(ops::dropout(t.constant(x), 0.5, d, false).value(), x);
    EXPECT_THROW(ops::dropout(t.constant(x), 1.0, d, true), ParameterError);
}

TEST(Ops, MedianDistanceFloor)
{
    Tape t;
    const Matrix same = Matrix::Ones(4, 2);
    Var d = ops::pairwise_sq_dists(t.constant(same));
    EXPECT_DOUBLE_EQ(ops::median_pairwise_distance(d, 1e-8).value()(0, 0), 1e-8);
}

TEST(Ops, MedianDistanceOddAndEvenCounts)
{
    Tape t;
    Matrix x(3, 1);
    x << 0, 1, 3; // distances 1, 2, 3
    Var d = ops::pairwise_sq_dists(t.constant(x));
    EXPECT_DOUBLE_EQ(ops::median_pairwise_distance(d, 1e-8).value()(0, 0), 2.0);
    Matrix y(4, 1);
    y << 0, 1, 3, 7; // 1 2 3 4 6 7 -> (3 + 4) / 2
    Var e = ops::pairwise_sq_dists(t.constant(y));
    EXPECT_DOUBLE_EQ(ops::median_pairwise_distance(e, 1e-8).value()(0, 0), 3.5);
}

TEST(Ops, GcnNormalizeSymmetric)
{
    Tape t;
    Matrix a(3, 3);
    a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
    const Matrix n = ops::gcn_normalize(t.constant(a), Matrix::Ones(3, 1), 1).value();
    EXPECT_LT((n - n.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    // degrees with self loops 2, 3, 2
    EXPECT_NEAR(n(0, 0), 0.5, 1e-15);
    EXPECT_NEAR(n(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
}

TEST(Ops, NeighborMaxIsolatedNodeGetsZero)
{
    Tape t;
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1;
    Matrix msg(3, 2);
    msg << 0.1, 0.9, 0.5, 0.2, 0.7, 0.7;
    const Matrix out = ops::neighbor_max(t.constant(msg), a, 1).value();
    EXPECT_DOUBLE_EQ(out(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(out(1, 1), 0.9);
    EXPECT_TRUE(out.row(2).isZero());
}

TEST(Ops, BatchNormEvalUsesRunningStats)
{
    Tape t;
    ops::BatchNormState st { Matrix::Constant(1, 2, 1.0), Matrix::Constant(1, 2, 4.0) };
    Matrix x(2, 2);
    x << 3, 5, 1, 1;
    const Matrix out = ops::batch_norm(t.constant(x), t.constant(Matrix::Ones(1, 2)),
                                       t.constant(Matrix::Zero(1, 2)), Matrix::Ones(2, 1), st,
                                       { 0.9, 0.0, false })
                           .value();
    EXPECT_NEAR(out(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(out(0, 1), 2.0, 1e-12);
    EXPECT_NEAR(out(1, 0), 0.0, 1e-12);
}

TEST(Ops, BatchNormTrainingUpdatesRunningStats)
{
    Tape t;
    ops::BatchNormState st { Matrix::Zero(1, 1), Matrix::Ones(1, 1) };
    Matrix x(3, 1);
    x << 1, 3, 100;
    Matrix mask(3, 1);
    mask << 1, 1, 0;
    const Matrix out = ops::batch_norm(t.constant(x), t.constant(Matrix::Ones(1, 1)),
                                       t.constant(Matrix::Zero(1, 1)), mask, st, {})
                           .value();
    EXPECT_NEAR(st.running_mean(0, 0), 0.2, 1e-12); // 0.1 * 2
    EXPECT_NEAR(st.running_var(0, 0), 1.0, 1e-12);  // 0.9 + 0.1 * 1
    EXPECT_DOUBLE_EQ(out(2, 0), 0.0);
    EXPECT_NEAR(out(0, 0), -1.0 / std::sqrt(1.0 + 1e-5), 1e-12);
}

// --- finite-difference checks ---------------------------------------------

TEST(Gradients, ElementwiseAndAlgebra)
{
    Rng rng { 21 };
    const Matrix a = random_matrix(3, 4, rng);
    const Matrix b = random_matrix(3, 4, rng);
    const Matrix c = random_matrix(4, 2, rng);
    const Matrix row = random_matrix(1, 4, rng);
    using V = const std::vector<Var>&;
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::matmul(v[0], v[1])); }, { a, c }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::add(v[0], v[1])); }, { a, b }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::sub(v[0], v[1])); }, { a, b }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::hadamard(v[0], v[1])); }, { a, b }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::scale(v[0], -1.7)); }, { a }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::add_row(v[0], v[1])); }, { a, row }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::transpose(v[0])); }, { a }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::reshape(v[0], 2, 6)); }, { a }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return ops::sum(v[0]); }, { a }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return ops::mean(v[0]); }, { a }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return ops::frobenius_dot(v[0], v[1]); }, { a, b }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::sigmoid(v[0])); }, { a }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::exp(v[0])); }, { a }), 1.0);
    const Matrix sq = random_matrix(4, 4, rng);
    EXPECT_LE(gradient_check([](Tape&, V v) { return ops::trace(v[0]); }, { sq }), 1.0);
}

TEST(Gradients, ReluAwayFromKink)
{
    Rng rng { 22 };
    Matrix a = random_matrix(4, 4, rng);
    for (Index i = 0; i < a.size(); ++i) {
        if (std::abs(a.data()[i]) < 0.05) {
            a.data()[i] = 0.3;
        }
    }
    EXPECT_LE(gradient_check([](Tape&, const std::vector<Var>& v) { return project(ops::relu(v[0])); }, { a }), 1.0);
}

TEST(Gradients, XlogxPositive)
{
    Rng rng { 23 };
    const Matrix a = random_matrix(3, 3, rng, 0.05, 1.0);
    EXPECT_LE(gradient_check([](Tape&, const std::vector<Var>& v) { return project(ops::xlogx(v[0])); }, { a }), 1.0);
}

TEST(Gradients, ColumnsAndRows)
{
    Rng rng { 24 };
    const Matrix a = random_matrix(4, 3, rng);
    const Matrix b = random_matrix(4, 2, rng);
    const Matrix w = random_matrix(4, 1, rng, 0.2, 2.0);
    Matrix mask(4, 1);
    mask << 1, 0, 1, 1;
    using V = const std::vector<Var>&;
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::concat_cols({ v[0], v[1] })); }, { a, b }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::slice_cols(v[0], 1, 2)); }, { a }), 1.0);
    EXPECT_LE(gradient_check([&](Tape&, V v) { return project(ops::mask_rows(v[0], mask)); }, { a }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::scale_rows(v[0], v[1])); }, { a, w }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::row_softmax(v[0])); }, { a }), 1.0);
    EXPECT_LE(gradient_check([&](Tape&, V v) { return project(ops::row_softmax(v[0], mask)); }, { a }), 1.0);
}

TEST(Gradients, KernelPieces)
{
    Rng rng { 25 };
    const Matrix x = random_matrix(6, 2, rng);
    const Matrix k = random_matrix(5, 5, rng);
    using V = const std::vector<Var>&;
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::pairwise_sq_dists(v[0])); }, { x }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::rbf_kernel(v[0], 0.8)); }, { x }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::center(v[0])); }, { k }), 1.0);
    EXPECT_LE(gradient_check(
                  [](Tape&, V v) {
                      Var d = ops::pairwise_sq_dists(v[0]);
                      return project(ops::rbf_from_sq_dists(d, ops::median_pairwise_distance(d, 1e-8)));
                  },
                  { x }),
              1.0);
}

TEST(Gradients, BceWithLogits)
{
    Rng rng { 26 };
    const Matrix z = random_matrix(5, 1, rng, -3, 3);
    Matrix y(5, 1);
    y << 1, 0, 0, 1, 1;
    EXPECT_LE(gradient_check([&](Tape&, const std::vector<Var>& v) { return project(ops::bce_with_logits(v[0], y)); }, { z }), 1.0);
}

TEST(Gradients, BatchedOps)
{
    Rng rng { 27 };
    const Index batch = 3;
    const Matrix a = random_matrix(batch * 4, 4, rng);
    const Matrix b = random_matrix(batch * 4, 2, rng);
    Matrix mask = Matrix::Ones(batch * 4, 1);
    mask(3, 0) = 0;
    mask(11, 0) = 0;
    Matrix adj = Matrix::Zero(batch * 4, 4);
    for (Index g = 0; g < batch; ++g) {
        for (Index i = 0; i < 3; ++i) {
            adj(g * 4 + i, i + 1) = adj(g * 4 + i + 1, i) = rng.uniform(0.2, 1.0);
        }
    }
    using V = const std::vector<Var>&;
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::batch_matmul(v[0], v[1], 3)); }, { a, b }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::batch_matmul(v[0], v[1], 3, true)); }, { a, b }), 1.0);
    EXPECT_LE(gradient_check([](Tape&, V v) { return project(ops::batch_transpose(v[0], 3)); }, { a }), 1.0);
    EXPECT_LE(gradient_check([&](Tape&, V v) { return project(ops::masked_block_mean(v[0], mask, 3)); }, { b }), 1.0);
    EXPECT_LE(gradient_check([&](Tape&, V v) { return project(ops::neighbor_max(v[0], adj, 3)); }, { b }), 1.0);
    EXPECT_LE(gradient_check([&](Tape&, V v) { return project(ops::gcn_normalize(v[0], mask, 3)); }, { adj }), 1.0);
}

TEST(Gradients, BatchNormTrainingAndEval)
{
    Rng rng { 28 };
    const Matrix x = random_matrix(6, 3, rng);
    const Matrix gamma = random_matrix(1, 3, rng, 0.5, 1.5);
    const Matrix beta = random_matrix(1, 3, rng);
    Matrix mask = Matrix::Ones(6, 1);
    mask(4, 0) = 0;
    for (bool training : { true, false }) {
        const double r = gradient_check(
            [&](Tape&, const std::vector<Var>& v) {
                ops::BatchNormState st { Matrix::Constant(1, 3, 0.1), Matrix::Constant(1, 3, 2.0) };
                return project(ops::batch_norm(v[0], v[1], v[2], mask, st, { 0.9, 1e-5, training }));
            },
            { x, gamma, beta });
        EXPECT_LE(r, 1.0) << "training=" << training;
    }
}

TEST(Gradients, DropoutWithFixedMask)
{
    Rng rng { 29 };
    const Matrix x = random_matrix(4, 4, rng);
    EXPECT_LE(gradient_check(
                  [](Tape&, const std::vector<Var>& v) {
                      Rng d { 5 };
                      return project(ops::dropout(v[0], 0.3, d, true));
                  },
                  { x }),
              1.0);
}

} // namespace
} // namespace sgnn
