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

#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace sgnn::ops {

namespace {

auto tape_of(Var a) -> Tape&
{
    if (!a.valid()) {
        throw ParameterError { "op applied to an unbound variable" };
    }
    return *a.tape();
}

auto tape_of(Var a, Var b) -> Tape&
{
    Tape& t = tape_of(a);
    if (b.tape() != &t) {
        throw ParameterError { "op operands live on different tapes" };
    }
    return t;
}

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b)
{
    throw ShapeError { std::string(op) + ": incompatible shapes "
                       + shape_string(a) + " and " + shape_string(b) };
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        shape_fail(op, a, b);
    }
}

void require_mask(const char* op, const Matrix& x, const Matrix& mask)
{
    if (mask.cols() != 1 || mask.rows() != x.rows()) {
        throw ShapeError { std::string(op) + ": mask " + shape_string(mask)
                           + " does not match rows of " + shape_string(x) };
    }
}

auto block_rows(const char* op, const Matrix& x, Index batch) -> Index
{
    if (batch <= 0 || x.rows() % batch != 0) {
        throw ShapeError { std::string(op) + ": " + shape_string(x)
                           + " is not a stack of " + std::to_string(batch)
                           + " blocks" };
    }
    return x.rows() / batch;
}

auto wants(Tape& t, Var v) -> bool
{
    return t.requires_grad(v);
}

} // namespace

auto matmul(Var a, Var b) -> Var
{
    Tape& t = tape_of(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    if (av.cols() != bv.rows()) {
        shape_fail("matmul", av, bv);
    }
    Matrix out = av * bv;
    return t.record("matmul", std::move(out), { a, b },
                    [a, b](Tape& tp, const Matrix& g) {
                        if (wants(tp, a)) {
                            tp.grad_ref(a).noalias()
                                += g * b.value().transpose();
                        }
                        if (wants(tp, b)) {
                            tp.grad_ref(b).noalias()
                                += a.value().transpose() * g;
                        }
                    });
}

auto add(Var a, Var b) -> Var
{
    Tape& t = tape_of(a, b);
    require_same_shape("add", a.value(), b.value());
    Matrix out = a.value() + b.value();
    return t.record("add", std::move(out), { a, b },
                    [a, b](Tape& tp, const Matrix& g) {
                        if (wants(tp, a)) {
                            tp.grad_ref(a) += g;
                        }
                        if (wants(tp, b)) {
                            tp.grad_ref(b) += g;
                        }
                    });
}

auto sub(Var a, Var b) -> Var
{
    Tape& t = tape_of(a, b);
    require_same_shape("sub", a.value(), b.value());
    Matrix out = a.value() - b.value();
    return t.record("sub", std::move(out), { a, b },
                    [a, b](Tape& tp, const Matrix& g) {
                        if (wants(tp, a)) {
                            tp.grad_ref(a) += g;
                        }
                        if (wants(tp, b)) {
                            tp.grad_ref(b) -= g;
                        }
                    });
}

auto hadamard(Var a, Var b) -> Var
{
    Tape& t = tape_of(a, b);
    require_same_shape("hadamard", a.value(), b.value());
    Matrix out = a.value().cwiseProduct(b.value());
    return t.record("hadamard", std::move(out), { a, b },
                    [a, b](Tape& tp, const Matrix& g) {
                        if (wants(tp, a)) {
                            tp.grad_ref(a) += g.cwiseProduct(b.value());
                        }
                        if (wants(tp, b)) {
                            tp.grad_ref(b) += g.cwiseProduct(a.value());
                        }
                    });
}

auto scale(Var a, double factor) -> Var
{
    Tape& t = tape_of(a);
    Matrix out = a.value() * factor;
    return t.record("scale", std::move(out), { a },
                    [a, factor](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a) += g * factor;
                    });
}

auto add_row(Var a, Var row) -> Var
{
    Tape& t = tape_of(a, row);
    const Matrix& av = a.value();
    const Matrix& rv = row.value();
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        shape_fail("add_row", av, rv);
    }
    Matrix out = av.rowwise() + rv.row(0);
    return t.record("add_row", std::move(out), { a, row },
                    [a, row](Tape& tp, const Matrix& g) {
                        if (wants(tp, a)) {
                            tp.grad_ref(a) += g;
                        }
                        if (wants(tp, row)) {
                            tp.grad_ref(row) += g.colwise().sum();
                        }
                    });
}

auto transpose(Var a) -> Var
{
    Tape& t = tape_of(a);
    Matrix out = a.value().transpose();
    return t.record("transpose", std::move(out), { a },
                    [a](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a) += g.transpose();
                    });
}

auto reshape(Var a, Index rows, Index cols) -> Var
{
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    if (rows < 0 || cols < 0 || rows * cols != av.size()) {
        throw ShapeError { "reshape: cannot view " + shape_string(av) + " as "
                           + shape_string(rows, cols) };
    }
    Matrix out = Eigen::Map<const Matrix>(av.data(), rows, cols);
    const Index r0 = av.rows();
    const Index c0 = av.cols();
    return t.record("reshape", std::move(out), { a },
                    [a, r0, c0](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a) += Eigen::Map<const Matrix>(g.data(), r0, c0);
                    });
}

auto sum(Var a) -> Var
{
    Tape& t = tape_of(a);
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    return t.record("sum", std::move(out), { a },
                    [a](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a).array() += g(0, 0);
                    });
}

auto mean(Var a) -> Var
{
    Tape& t = tape_of(a);
    const auto n = static_cast<double>(a.value().size());
    if (n == 0) {
        throw ShapeError { "mean: empty matrix" };
    }
    Matrix out(1, 1);
    out(0, 0) = a.value().sum() / n;
    return t.record("mean", std::move(out), { a },
                    [a, n](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a).array() += g(0, 0) / n;
                    });
}

auto trace(Var a) -> Var
{
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    if (av.rows() != av.cols()) {
        throw ShapeError { "trace: matrix " + shape_string(av)
                           + " is not square" };
    }
    Matrix out(1, 1);
    out(0, 0) = av.trace();
    return t.record("trace", std::move(out), { a },
                    [a](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a).diagonal().array() += g(0, 0);
                    });
}

auto frobenius_dot(Var a, Var b) -> Var
{
    Tape& t = tape_of(a, b);
    require_same_shape("frobenius_dot", a.value(), b.value());
    Matrix out(1, 1);
    out(0, 0) = a.value().cwiseProduct(b.value()).sum();
    return t.record("frobenius_dot", std::move(out), { a, b },
                    [a, b](Tape& tp, const Matrix& g) {
                        if (wants(tp, a)) {
                            tp.grad_ref(a) += g(0, 0) * b.value();
                        }
                        if (wants(tp, b)) {
                            tp.grad_ref(b) += g(0, 0) * a.value();
                        }
                    });
}

auto relu(Var a) -> Var
{
    Tape& t = tape_of(a);
    Matrix out = a.value().cwiseMax(0.0);
    return t.record("relu", std::move(out), { a },
                    [a](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a).array()
                            += (a.value().array() > 0.0).select(g.array(), 0.0);
                    });
}

auto xlogx(Var a) -> Var
{
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    if ((av.array() < 0.0).any()) {
        throw ParameterError { "xlogx: negative entry" };
    }
    Matrix out = av.unaryExpr([](double x) { return x > 0.0 ? x * std::log(x) : 0.0; });
    return t.record("xlogx", std::move(out), { a },
                    [a](Tape& tp, const Matrix& g) {
                        // d/dx x log x = log x + 1; zero entries get no gradient.
                        const Matrix d = a.value().unaryExpr([](double x) {
                            return x > 0.0 ? std::log(x) + 1.0 : 0.0;
                        });
                        tp.grad_ref(a) += g.cwiseProduct(d);
                    });
}

auto sigmoid(Var a) -> Var
{
    Tape& t = tape_of(a);
    Matrix out = a.value().unaryExpr([](double x) {
        return x >= 0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
    });
    Matrix s = out;
    return t.record("sigmoid", std::move(out), { a },
                    [a, s = std::move(s)](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a).array()
                            += g.array() * s.array() * (1.0 - s.array());
                    });
}

auto exp(Var a) -> Var
{
    Tape& t = tape_of(a);
    Matrix out = a.value().array().exp().matrix();
    Matrix e = out;
    return t.record("exp", std::move(out), { a },
                    [a, e = std::move(e)](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a) += g.cwiseProduct(e);
                    });
}

auto concat_cols(const std::vector<Var>& parts) -> Var
{
    if (parts.empty()) {
        throw ShapeError { "concat_cols: no operands" };
    }
    Tape& t = tape_of(parts.front());
    const Index rows = parts.front().rows();
    Index cols = 0;
    for (const Var& p : parts) {
        tape_of(parts.front(), p);
        if (p.rows() != rows) {
            shape_fail("concat_cols", parts.front().value(), p.value());
        }
        cols += p.cols();
    }
    Matrix out(rows, cols);
    Index at = 0;
    for (const Var& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    return t.record("concat_cols", std::move(out), parts,
                    [parts](Tape& tp, const Matrix& g) {
                        Index offset = 0;
                        for (const Var& p : parts) {
                            const Index c = p.cols();
                            if (wants(tp, p)) {
                                tp.grad_ref(p) += g.middleCols(offset, c);
                            }
                            offset += c;
                        }
                    });
}

auto slice_cols(Var a, Index start, Index count) -> Var
{
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    if (start < 0 || count < 0 || start + count > av.cols()) {
        throw ShapeError { "slice_cols: columns [" + std::to_string(start)
                           + ", " + std::to_string(start + count)
                           + ") out of range for " + shape_string(av) };
    }
    Matrix out = av.middleCols(start, count);
    return t.record("slice_cols", std::move(out), { a },
                    [a, start, count](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a).middleCols(start, count) += g;
                    });
}

auto mask_rows(Var a, const Matrix& mask) -> Var
{
    Tape& t = tape_of(a);
    require_mask("mask_rows", a.value(), mask);
    Matrix out = a.value().array().colwise() * mask.col(0).array();
    return t.record("mask_rows", std::move(out), { a },
                    [a, mask](Tape& tp, const Matrix& g) {
                        tp.grad_ref(a).array()
                            += g.array().colwise() * mask.col(0).array();
                    });
}

auto scale_rows(Var a, Var weights) -> Var
{
    Tape& t = tape_of(a, weights);
    const Matrix& av = a.value();
    const Matrix& wv = weights.value();
    if (wv.cols() != 1 || wv.rows() != av.rows()) {
        shape_fail("scale_rows", av, wv);
    }
    Matrix out = av.array().colwise() * wv.col(0).array();
    return t.record("scale_rows", std::move(out), { a, weights },
                    [a, weights](Tape& tp, const Matrix& g) {
                        if (wants(tp, a)) {
                            tp.grad_ref(a).array()
                                += g.array().colwise()
                                   * weights.value().col(0).array();
                        }
                        if (wants(tp, weights)) {
                            tp.grad_ref(weights)
                                += g.cwiseProduct(a.value()).rowwise().sum();
                        }
                    });
}

namespace {

auto softmax_impl(Var a, const Matrix* mask) -> Var
{
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    if (mask != nullptr) {
        require_mask("row_softmax", av, *mask);
    }
    Matrix out = Matrix::Zero(av.rows(), av.cols());
    for (Index i = 0; i < av.rows(); ++i) {
        if (mask != nullptr && (*mask)(i, 0) == 0.0) {
            continue;
        }
        const double mx = av.row(i).maxCoeff();
        out.row(i) = (av.row(i).array() - mx).exp().matrix();
        out.row(i) /= out.row(i).sum();
    }
    Matrix y = out;
    return t.record("row_softmax", std::move(out), { a },
                    [a, y = std::move(y)](Tape& tp, const Matrix& g) {
                        // Masked rows of y are zero, so they receive zero.
                        const Eigen::VectorXd dots
                            = g.cwiseProduct(y).rowwise().sum();
                        tp.grad_ref(a).array()
                            += y.array() * (g.colwise() - dots).array();
                    });
}

} // namespace

auto row_softmax(Var a) -> Var
{
    return softmax_impl(a, nullptr);
}

auto row_softmax(Var a, const Matrix& mask) -> Var
{
    return softmax_impl(a, &mask);
}

auto pairwise_sq_dists(Var x) -> Var
{
    Tape& t = tape_of(x);
    const Matrix& xv = x.value();
    const Index m = xv.rows();
    Matrix out = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
        for (Index j = i + 1; j < m; ++j) {
            const double d = (xv.row(i) - xv.row(j)).squaredNorm();
            out(i, j) = d;
            out(j, i) = d;
        }
    }
    return t.record("pairwise_sq_dists", std::move(out), { x },
                    [x](Tape& tp, const Matrix& g) {
                        const Matrix& xv = x.value();
                        const Matrix gs = g + g.transpose();
                        // dx_i = 2 sum_j (g_ij + g_ji) (x_i - x_j)
                        const Eigen::VectorXd rs = gs.rowwise().sum();
                        Matrix& gx = tp.grad_ref(x);
                        gx.noalias() += 2.0 * (rs.asDiagonal() * xv);
                        gx.noalias() -= 2.0 * (gs * xv);
                    });
}

auto median_pairwise_distance(Var sq_dists, double floor) -> Var
{
    Tape& t = tape_of(sq_dists);
    const Matrix& d = sq_dists.value();
    const Index m = d.rows();
    if (d.cols() != m || m < 2) {
        throw ShapeError { "median_pairwise_distance: need a square matrix of "
                           "at least 2x2, got " + shape_string(d) };
    }
    struct Entry
    {
        double dist;
        Index i;
        Index j;
    };
    std::vector<Entry> entries;
    entries.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    for (Index i = 0; i < m; ++i) {
        for (Index j = i + 1; j < m; ++j) {
            entries.push_back({ std::sqrt(std::max(d(i, j), 0.0)), i, j });
        }
    }
    auto less = [](const Entry& a, const Entry& b) {
        return a.dist < b.dist
               || (a.dist == b.dist && (a.i < b.i || (a.i == b.i && a.j < b.j)));
    };
    const std::size_t count = entries.size();
    const std::size_t hi = count / 2;
    std::nth_element(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(hi),
                     entries.end(), less);
    std::vector<Entry> chosen { entries[hi] };
    if (count % 2 == 0) {
        chosen.push_back(*std::max_element(
            entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(hi), less));
    }
    double value = 0.0;
    for (const Entry& e : chosen) {
        value += e.dist;
    }
    value /= static_cast<double>(chosen.size());
    const bool clamped = !(value >= floor);
    Matrix out(1, 1);
    out(0, 0) = clamped ? floor : value;
    if (clamped) {
        return t.record("median_pairwise_distance", std::move(out), {}, nullptr);
    }
    return t.record(
        "median_pairwise_distance", std::move(out), { sq_dists },
        [sq_dists, chosen](Tape& tp, const Matrix& g) {
            Matrix& gd = tp.grad_ref(sq_dists);
            const double share = g(0, 0) / static_cast<double>(chosen.size());
            for (const Entry& e : chosen) {
                if (e.dist > 0.0) {
                    gd(e.i, e.j) += share / (2.0 * e.dist);
                }
            }
        });
}

auto rbf_from_sq_dists(Var sq_dists, Var bandwidth) -> Var
{
    Tape& t = tape_of(sq_dists, bandwidth);
    const Matrix& d = sq_dists.value();
    const Matrix& bw = bandwidth.value();
    if (bw.rows() != 1 || bw.cols() != 1) {
        shape_fail("rbf_from_sq_dists", d, bw);
    }
    const double sigma = bw(0, 0);
    if (!(sigma > 0.0)) {
        throw ParameterError { "rbf kernel: bandwidth must be positive, got "
                               + std::to_string(sigma) };
    }
    const double inv = 1.0 / (2.0 * sigma * sigma);
    Matrix out = (-inv * d.array()).exp().matrix();
    Matrix k = out;
    return t.record("rbf_from_sq_dists", std::move(out), { sq_dists, bandwidth },
                    [sq_dists, bandwidth, k = std::move(k), inv, sigma](Tape& tp,
                                                                const Matrix& g) {
                        const Matrix gk = g.cwiseProduct(k);
                        if (wants(tp, sq_dists)) {
                            tp.grad_ref(sq_dists) -= inv * gk;
                        }
                        if (wants(tp, bandwidth)) {
                            tp.grad_ref(bandwidth)(0, 0)
                                += gk.cwiseProduct(sq_dists.value()).sum()
                                   / (sigma * sigma * sigma);
                        }
                    });
}

auto rbf_kernel(Var x, double bandwidth) -> Var
{
    if (!(bandwidth > 0.0)) {
        throw ParameterError { "rbf_kernel: bandwidth must be positive, got "
                               + std::to_string(bandwidth) };
    }
    Tape& t = tape_of(x);
    Matrix bw(1, 1);
    bw(0, 0) = bandwidth;
    return rbf_from_sq_dists(pairwise_sq_dists(x), t.constant(std::move(bw)));
}

namespace {

auto double_center(const Matrix& k) -> Matrix
{
    const Eigen::VectorXd r = k.rowwise().mean();
    const Eigen::RowVectorXd c = k.colwise().mean();
    const double grand = k.mean();
    Matrix out = k;
    out.colwise() -= r;
    out.rowwise() -= c;
    out.array() += grand;
    return out;
}

} // namespace

auto center(Var k) -> Var
{
    Tape& t = tape_of(k);
    if (k.rows() != k.cols() || k.rows() == 0) {
        throw ShapeError { "center: matrix " + shape_string(k.value())
                           + " is not square" };
    }
    return t.record("center", double_center(k.value()), { k },
                    [k](Tape& tp, const Matrix& g) {
                        tp.grad_ref(k) += double_center(g);
                    });
}

auto bce_with_logits(Var logits, const Matrix& labels) -> Var
{
    Tape& t = tape_of(logits);
    const Matrix& z = logits.value();
    require_same_shape("bce_with_logits", z, labels);
    Matrix out(z.rows(), z.cols());
    for (Index i = 0; i < z.size(); ++i) {
        const double x = z.data()[i];
        out.data()[i] = std::max(x, 0.0) - x * labels.data()[i]
                        + std::log1p(std::exp(-std::abs(x)));
    }
    return t.record("bce_with_logits", std::move(out), { logits },
                    [logits, labels](Tape& tp, const Matrix& g) {
                        const Matrix& z = logits.value();
                        Matrix& gz = tp.grad_ref(logits);
                        for (Index i = 0; i < z.size(); ++i) {
                            const double x = z.data()[i];
                            const double s = x >= 0
                                                 ? 1.0 / (1.0 + std::exp(-x))
                                                 : std::exp(x) / (1.0 + std::exp(x));
                            gz.data()[i] += g.data()[i] * (s - labels.data()[i]);
                        }
                    });
}

auto batch_matmul(Var a, Var b, Index batch, bool transpose_a) -> Var
{
    Tape& t = tape_of(a, b);
    const Matrix& av = a.value();
    const Matrix& bv = b.value();
    const Index p = block_rows("batch_matmul", av, batch);
    const Index r = block_rows("batch_matmul", bv, batch);
    const Index q = av.cols();
    const Index s = bv.cols();
    if ((transpose_a ? p : q) != r) {
        shape_fail("batch_matmul", av, bv);
    }
    const Index out_rows = transpose_a ? q : p;
    Matrix out(batch * out_rows, s);
    for (Index i = 0; i < batch; ++i) {
        const auto ai = av.middleRows(i * p, p);
        const auto bi = bv.middleRows(i * r, r);
        if (transpose_a) {
            out.middleRows(i * q, q).noalias() = ai.transpose() * bi;
        } else {
            out.middleRows(i * p, p).noalias() = ai * bi;
        }
    }
    return t.record(
        "batch_matmul", std::move(out), { a, b },
        [a, b, batch, transpose_a, p, r, q, out_rows](Tape& tp, const Matrix& g) {
            const Matrix& av = a.value();
            const Matrix& bv = b.value();
            const bool ga = wants(tp, a);
            const bool gb = wants(tp, b);
            Matrix* gav = ga ? &tp.grad_ref(a) : nullptr;
            Matrix* gbv = gb ? &tp.grad_ref(b) : nullptr;
            for (Index i = 0; i < batch; ++i) {
                const auto ai = av.middleRows(i * p, p);
                const auto bi = bv.middleRows(i * r, r);
                const auto gi = g.middleRows(i * out_rows, out_rows);
                if (transpose_a) {
                    // C = A^T B: dA = B G^T, dB = A G
                    if (ga) {
                        gav->middleRows(i * p, p).noalias() += bi * gi.transpose();
                    }
                    if (gb) {
                        gbv->middleRows(i * r, r).noalias() += ai * gi;
                    }
                } else {
                    if (ga) {
                        gav->middleRows(i * p, p).noalias() += gi * bi.transpose();
                    }
                    if (gb) {
                        gbv->middleRows(i * r, r).noalias() += ai.transpose() * gi;
                    }
                }
            }
        });
}

auto batch_transpose(Var a, Index batch) -> Var
{
    Tape& t = tape_of(a);
    const Matrix& av = a.value();
    const Index p = block_rows("batch_transpose", av, batch);
    const Index q = av.cols();
    Matrix out(batch * q, p);
    for (Index i = 0; i < batch; ++i) {
        out.middleRows(i * q, q) = av.middleRows(i * p, p).transpose();
    }
    return t.record("batch_transpose", std::move(out), { a },
                    [a, batch, p, q](Tape& tp, const Matrix& g) {
                        Matrix& ga = tp.grad_ref(a);
                        for (Index i = 0; i < batch; ++i) {
                            ga.middleRows(i * p, p) += g.middleRows(i * q, q).transpose();
                        }
                    });
}

auto masked_block_mean(Var x, const Matrix& mask, Index batch) -> Var
{
    Tape& t = tape_of(x);
    const Matrix& xv = x.value();
    require_mask("masked_block_mean", xv, mask);
    const Index n = block_rows("masked_block_mean", xv, batch);
    Matrix out = Matrix::Zero(batch, xv.cols());
    Eigen::VectorXd inv_count(batch);
    for (Index i = 0; i < batch; ++i) {
        const double count = mask.middleRows(i * n, n).sum();
        inv_count(i) = count > 0 ? 1.0 / count : 0.0;
        out.row(i) = (mask.middleRows(i * n, n).transpose()
                      * xv.middleRows(i * n, n))
                     * inv_count(i);
    }
    return t.record("masked_block_mean", std::move(out), { x },
                    [x, mask, batch, n, inv_count](Tape& tp, const Matrix& g) {
                        Matrix& gx = tp.grad_ref(x);
                        for (Index i = 0; i < batch; ++i) {
                            for (Index v = 0; v < n; ++v) {
                                const double w = mask(i * n + v, 0) * inv_count(i);
                                if (w != 0.0) {
                                    gx.row(i * n + v) += w * g.row(i);
                                }
                            }
                        }
                    });
}

auto neighbor_max(Var messages, const Matrix& adjacency, Index batch) -> Var
{
    Tape& t = tape_of(messages);
    const Matrix& mv = messages.value();
    const Index n = block_rows("neighbor_max", mv, batch);
    if (adjacency.rows() != mv.rows() || adjacency.cols() != n) {
        shape_fail("neighbor_max", mv, adjacency);
    }
    const Index d = mv.cols();
    Matrix out = Matrix::Zero(mv.rows(), d);
    // Source row feeding each output entry; -1 for the empty neighbourhood.
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> arg
        = Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(
            mv.rows(), d, -1);
    for (Index i = 0; i < batch; ++i) {
        for (Index v = 0; v < n; ++v) {
            const Index row = i * n + v;
            for (Index u = 0; u < n; ++u) {
                if (u == v || !(adjacency(row, u) > 0.0)) {
                    continue;
                }
                const Index src = i * n + u;
                for (Index c = 0; c < d; ++c) {
                    if (arg(row, c) < 0 || mv(src, c) > out(row, c)) {
                        out(row, c) = mv(src, c);
                        arg(row, c) = src;
                    }
                }
            }
        }
    }
    return t.record("neighbor_max", std::move(out), { messages },
                    [messages, arg = std::move(arg)](Tape& tp, const Matrix& g) {
                        Matrix& gm = tp.grad_ref(messages);
                        for (Index r = 0; r < g.rows(); ++r) {
                            for (Index c = 0; c < g.cols(); ++c) {
                                const Index src = arg(r, c);
                                if (src >= 0) {
                                    gm(src, c) += g(r, c);
                                }
                            }
                        }
                    });
}

auto gcn_normalize(Var adjacency, const Matrix& mask, Index batch) -> Var
{
    Tape& t = tape_of(adjacency);
    const Matrix& av = adjacency.value();
    require_mask("gcn_normalize", av, mask);
    const Index n = block_rows("gcn_normalize", av, batch);
    if (av.cols() != n) {
        throw ShapeError { "gcn_normalize: blocks of " + shape_string(av)
                           + " are not square" };
    }
    Matrix tilde = av;
    for (Index i = 0; i < batch; ++i) {
        for (Index v = 0; v < n; ++v) {
            tilde(i * n + v, v) += mask(i * n + v, 0);
        }
    }
    Eigen::VectorXd s(av.rows());
    for (Index r = 0; r < av.rows(); ++r) {
        const double deg = tilde.row(r).sum();
        s(r) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
    }
    Matrix out(av.rows(), n);
    for (Index i = 0; i < batch; ++i) {
        const auto si = s.segment(i * n, n);
        out.middleRows(i * n, n)
            = si.asDiagonal() * tilde.middleRows(i * n, n) * si.asDiagonal();
    }
    return t.record(
        "gcn_normalize", std::move(out), { adjacency },
        [adjacency, tilde = std::move(tilde), s = std::move(s), batch, n](
            Tape& tp, const Matrix& g) {
            Matrix& ga = tp.grad_ref(adjacency);
            for (Index i = 0; i < batch; ++i) {
                const auto si = s.segment(i * n, n);
                const auto ti = tilde.middleRows(i * n, n);
                const auto gi = g.middleRows(i * n, n);
                // h_kl = G_kl * Ã_kl * s_k * s_l
                const Matrix h = si.asDiagonal()
                                 * gi.cwiseProduct(ti) * si.asDiagonal();
                const Eigen::VectorXd through
                    = h.rowwise().sum() + h.colwise().sum().transpose();
                for (Index v = 0; v < n; ++v) {
                    const double sv = si(v);
                    // d s / d deg = -s^3 / 2; `through` already carries
                    // one factor of s_v.
                    const double gdeg = -0.5 * sv * sv * through(v);
                    ga.row(i * n + v) += gi.row(v).cwiseProduct(
                                             (sv * si).transpose())
                                         + Eigen::RowVectorXd::Constant(n, gdeg);
                }
            }
        });
}

auto batch_norm(Var x, Var gamma, Var beta, const Matrix& mask,
                BatchNormState& state, const BatchNormOptions& options) -> Var
{
    Tape& t = tape_of(x, gamma);
    tape_of(x, beta);
    const Matrix& xv = x.value();
    require_mask("batch_norm", xv, mask);
    const Index c = xv.cols();
    if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1
        || beta.cols() != c) {
        shape_fail("batch_norm", xv, gamma.value());
    }
    if (state.running_mean.size() != c || state.running_var.size() != c) {
        throw ShapeError { "batch_norm: running statistics do not match "
                           + shape_string(xv) };
    }
    const double count = mask.sum();
    Eigen::RowVectorXd mu;
    Eigen::RowVectorXd var;
    const bool use_batch = options.training && count > 0;
    if (use_batch) {
        mu = (mask.transpose() * xv) / count;
        Matrix centered = xv.rowwise() - mu;
        centered.array().colwise() *= mask.col(0).array();
        var = centered.colwise().squaredNorm() / count;
        state.running_mean = options.momentum * state.running_mean
                             + (1.0 - options.momentum) * Matrix(mu);
        state.running_var = options.momentum * state.running_var
                            + (1.0 - options.momentum) * Matrix(var);
    } else {
        mu = state.running_mean.row(0);
        var = state.running_var.row(0);
    }
    const Eigen::RowVectorXd inv_std
        = (var.array() + options.eps).rsqrt().matrix();
    Matrix xhat = (xv.rowwise() - mu).array().rowwise() * inv_std.array();
    xhat.array().colwise() *= mask.col(0).array();
    Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
    out.rowwise() += beta.value().row(0);
    out.array().colwise() *= mask.col(0).array();
    return t.record(
        "batch_norm", std::move(out), { x, gamma, beta },
        [x, gamma, beta, mask, xhat = std::move(xhat), inv_std, count,
         use_batch](Tape& tp, const Matrix& g_in) {
            Matrix g = g_in.array().colwise() * mask.col(0).array();
            if (wants(tp, gamma)) {
                tp.grad_ref(gamma) += g.cwiseProduct(xhat).colwise().sum();
            }
            if (wants(tp, beta)) {
                tp.grad_ref(beta) += g.colwise().sum();
            }
            if (!wants(tp, x)) {
                return;
            }
            const Matrix gxhat = g.array().rowwise() * gamma.value().row(0).array();
            if (!use_batch) {
                tp.grad_ref(x).array()
                    += gxhat.array().rowwise() * inv_std.array();
                return;
            }
            const Eigen::RowVectorXd m1 = gxhat.colwise().sum() / count;
            const Eigen::RowVectorXd m2
                = gxhat.cwiseProduct(xhat).colwise().sum() / count;
            Matrix gx = gxhat;
            gx.rowwise() -= m1;
            gx -= (xhat.array().rowwise() * m2.array()).matrix();
            gx.array().rowwise() *= inv_std.array();
            gx.array().colwise() *= mask.col(0).array();
            tp.grad_ref(x) += gx;
        });
}

auto dropout(Var x, double rate, Rng& rng, bool training) -> Var
{
    if (rate < 0.0 || rate >= 1.0) {
        throw ParameterError { "dropout: rate must lie in [0, 1), got "
                               + std::to_string(rate) };
    }
    if (!training || rate == 0.0) {
        return x;
    }
    Tape& t = tape_of(x);
    Matrix keep(x.rows(), x.cols());
    for (Index i = 0; i < keep.size(); ++i) {
        keep.data()[i] = rng.bernoulli(rate) ? 0.0 : 1.0 / (1.0 - rate);
    }
    Matrix out = x.value().cwiseProduct(keep);
    return t.record("dropout", std::move(out), { x },
                    [x, keep = std::move(keep)](Tape& tp, const Matrix& g) {
                        tp.grad_ref(x) += g.cwiseProduct(keep);
                    });
}

} // namespace sgnn::ops
