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

#include "hsic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sgnn::cvd {

namespace {

void require_pair(const Matrix& u, const Matrix& v)
{
    if (u.rows() != v.rows()) {
        throw ShapeError { "hsic: sample counts differ (" + shape_string(u)
                           + " vs " + shape_string(v) + ")" };
    }
    if (u.rows() < 2) {
        throw ParameterError { "hsic: need at least 2 samples, got "
                               + std::to_string(u.rows()) };
    }
}

auto check_blocks(const Matrix& h, Index blocks) -> Index
{
    if (blocks <= 0 || h.cols() % blocks != 0) {
        throw ShapeError { "objective: " + std::to_string(h.cols())
                           + " columns do not split into "
                           + std::to_string(blocks) + " blocks" };
    }
    return h.cols() / blocks;
}

auto centered_product(Var k, Var l) -> Var
{
    const double m = static_cast<double>(k.rows());
    return ops::scale(ops::frobenius_dot(ops::center(k), l), 1.0 / ((m - 1) * (m - 1)));
}

struct Median
{
    double value = 0.0;
    // Pairs (i, j) averaged into the median; empty when clamped.
    std::vector<std::pair<Index, Index>> pairs;
};

auto median_distance(const Matrix& sq, double floor) -> Median
{
    // Ranking squared distances gives the same order as distances. Entries
    // are (squared distance, packed pair) so ties break by (i, j).
    const Index m = sq.rows();
    std::vector<std::pair<double, Index>> e;
    e.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    for (Index i = 0; i < m; ++i) {
        for (Index j = i + 1; j < m; ++j) {
            e.emplace_back(sq(i, j), i * m + j);
        }
    }
    const std::size_t hi = e.size() / 2;
    std::nth_element(e.begin(), e.begin() + static_cast<std::ptrdiff_t>(hi), e.end());
    Median out;
    out.pairs.emplace_back(e[hi].second / m, e[hi].second % m);
    double total = std::sqrt(e[hi].first);
    if (e.size() % 2 == 0) {
        const auto lo = *std::max_element(e.begin(),
                                          e.begin() + static_cast<std::ptrdiff_t>(hi));
        out.pairs.emplace_back(lo.second / m, lo.second % m);
        total += std::sqrt(lo.first);
    }
    out.value = total / static_cast<double>(out.pairs.size());
    if (!(out.value >= floor)) {
        out.value = floor;
        out.pairs.clear();
    }
    return out;
}

} // namespace

void HsicConfig::validate() const
{
    if (decor_epochs < 1) {
        throw ParameterError { "decor_epochs must be at least 1" };
    }
    if (!(weight_lr > 0.0)) {
        throw ParameterError { "weight_lr must be positive" };
    }
    if (bandwidth_rule == BandwidthRule::fixed && !(fixed_bandwidth > 0.0)) {
        throw ParameterError { "fixed bandwidth must be positive" };
    }
}

auto kernel_matrix(Var x, const HsicConfig& config) -> Var
{
    if (config.bandwidth_rule == BandwidthRule::fixed) {
        return ops::rbf_kernel(x, config.fixed_bandwidth);
    }
    Var d = ops::pairwise_sq_dists(x);
    return ops::rbf_from_sq_dists(
        d, ops::median_pairwise_distance(d, config.bandwidth_floor));
}

auto hsic0(Var u, Var v, const HsicConfig& config) -> Var
{
    require_pair(u.value(), v.value());
    return centered_product(kernel_matrix(u, config), kernel_matrix(v, config));
}

auto hsic0(const Matrix& u, const Matrix& v, const HsicConfig& config) -> double
{
    Tape t;
    return hsic0(t.constant(u), t.constant(v), config).value()(0, 0);
}

auto simplex_weights(Var logits) -> Var
{
    if (logits.cols() != 1) {
        throw ShapeError { "simplex_weights: logits must be a column, got "
                           + shape_string(logits.value()) };
    }
    const auto m = static_cast<double>(logits.rows());
    return ops::scale(ops::transpose(ops::row_softmax(ops::transpose(logits))), m);
}

auto simplex_weights(const Eigen::VectorXd& logits) -> Eigen::VectorXd
{
    const double mx = logits.maxCoeff();
    Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
    return e * (static_cast<double>(logits.size()) / e.sum());
}

auto weighted_hsic(Var u, Var v, Var weights, const HsicConfig& config) -> Var
{
    require_pair(u.value(), v.value());
    if (weights.rows() != u.rows() || weights.cols() != 1) {
        throw ShapeError { "weighted_hsic: weights " + shape_string(weights.value())
                           + " do not match " + std::to_string(u.rows())
                           + " samples" };
    }
    return hsic0(ops::scale_rows(u, weights), ops::scale_rows(v, weights), config);
}

auto global_objective(Var h, Var weights, Index blocks, const HsicConfig& config)
    -> Var
{
    const Index d = check_blocks(h.value(), blocks);
    Tape& t = *h.tape();
    if (h.rows() < 2) {
        throw ParameterError { "objective: need at least 2 samples" };
    }
    if (blocks == 1) {
        return t.constant(Matrix::Zero(1, 1));
    }
    // Each block's weighted kernel is shared by all pairs it takes part in.
    std::vector<Var> kernels;
    std::vector<Var> centered;
    for (Index k = 0; k < blocks; ++k) {
        Var block = ops::scale_rows(ops::slice_cols(h, k * d, d), weights);
        kernels.push_back(kernel_matrix(block, config));
        centered.push_back(ops::center(kernels.back()));
    }
    const auto m = static_cast<double>(h.rows());
    std::vector<Var> terms;
    for (Index i = 0; i < blocks; ++i) {
        for (Index j = i + 1; j < blocks; ++j) {
            terms.push_back(ops::frobenius_dot(centered[static_cast<std::size_t>(i)],
                                               kernels[static_cast<std::size_t>(j)]));
        }
    }
    Var total = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i) {
        total = ops::add(total, terms[i]);
    }
    return ops::scale(total, 1.0 / ((m - 1) * (m - 1)));
}

auto single_treatment_objective(Var h, Index k, Var weights, Index blocks,
                                const HsicConfig& config) -> Var
{
    const Index d = check_blocks(h.value(), blocks);
    if (k < 0 || k >= blocks) {
        throw ParameterError { "treatment index " + std::to_string(k)
                               + " outside [0, " + std::to_string(blocks) + ")" };
    }
    Tape& t = *h.tape();
    Var treatment = ops::slice_cols(h, k * d, d);
    Var total = t.constant(Matrix::Zero(1, 1));
    for (Index p = 0; p < blocks; ++p) {
        if (p != k) {
            total = ops::add(total, weighted_hsic(treatment, ops::slice_cols(h, p * d, d),
                                                  weights, config));
        }
    }
    return total;
}

DecorrelationObjective::DecorrelationObjective(const Matrix& h, Index blocks,
                                               const HsicConfig& config)
  : m_ { h.rows() }, config_ { config }
{
    const Index d = check_blocks(h, blocks);
    if (m_ < 2) {
        throw ParameterError { "objective: need at least 2 samples" };
    }
    grams_.reserve(static_cast<std::size_t>(blocks));
    for (Index k = 0; k < blocks; ++k) {
        const auto block = h.middleCols(k * d, d);
        grams_.emplace_back(block * block.transpose());
    }
}

auto DecorrelationObjective::evaluate(const Eigen::VectorXd& logits,
                                      Eigen::VectorXd* grad) const -> double
{
    if (logits.size() != m_) {
        throw ShapeError { "objective: expected " + std::to_string(m_)
                           + " logits, got " + std::to_string(logits.size()) };
    }
    const std::size_t blocks = grams_.size();
    if (blocks < 2) {
        if (grad != nullptr) {
            grad->setZero(m_);
        }
        return 0.0;
    }
    const Eigen::VectorXd w = simplex_weights(logits);
    const auto md = static_cast<double>(m_);
    const double norm = 1.0 / ((md - 1) * (md - 1));

    // f(A, B) = <P A P, B> = <A, B> - 2m rA.rB + m^2 muA muB for symmetric A, B
    // with row means r and grand mean mu. The pair sum over i < j is
    // (f(S, S) - sum_k f(K_k, K_k)) / 2 with S the sum of all kernels.
    std::vector<Matrix> sq(blocks);
    std::vector<Matrix> kern(blocks);
    std::vector<Median> med(blocks);
    std::vector<Eigen::VectorXd> rows(blocks);
    Matrix ksum = Matrix::Zero(m_, m_);
    Eigen::VectorXd rsum = Eigen::VectorXd::Zero(m_);
    double self_terms = 0.0;
    for (std::size_t k = 0; k < blocks; ++k) {
        const Matrix& g = grams_[k];
        const Eigen::VectorXd scaled_diag = w.cwiseProduct(w).cwiseProduct(g.diagonal());
        // ||w_i u_i - w_j u_j||^2 from the Gram matrix.
        Matrix d = -2.0 * (w.asDiagonal() * g * w.asDiagonal());
        d.colwise() += scaled_diag;
        d.rowwise() += scaled_diag.transpose();
        d = d.cwiseMax(0.0);
        d.diagonal().setZero();
        med[k] = config_.bandwidth_rule == BandwidthRule::fixed
                     ? Median { config_.fixed_bandwidth, {} }
                     : median_distance(d, config_.bandwidth_floor);
        const double sigma = med[k].value;
        kern[k] = (d.array() * (-1.0 / (2.0 * sigma * sigma))).exp().matrix();
        rows[k] = kern[k].rowwise().mean();
        const double mu = rows[k].mean();
        self_terms += kern[k].squaredNorm() - 2.0 * md * rows[k].squaredNorm()
                      + md * md * mu * mu;
        ksum += kern[k];
        rsum += rows[k];
        sq[k] = std::move(d);
    }
    const double musum = rsum.mean();
    const double all_terms = ksum.squaredNorm() - 2.0 * md * rsum.squaredNorm()
                             + md * md * musum * musum;
    const double value = 0.5 * norm * (all_terms - self_terms);
    if (!std::isfinite(value)) {
        throw NumericError { "decorrelation objective is not finite" };
    }
    if (grad == nullptr) {
        return value;
    }

    // d value / d K_k = norm * P (S - K_k) P.
    Eigen::VectorXd gw = Eigen::VectorXd::Zero(m_);
    Matrix gk(m_, m_);
    for (std::size_t k = 0; k < blocks; ++k) {
        const double sigma = med[k].value;
        const Eigen::VectorXd r = rsum - rows[k];
        const double mu = r.mean();
        gk = ksum - kern[k];
        gk.colwise() -= r;
        gk.rowwise() -= r.transpose();
        gk.array() += mu;
        gk.array() *= norm * kern[k].array();
        double gsigma = 0.0;
        if (!med[k].pairs.empty()) {
            gsigma = gk.cwiseProduct(sq[k]).sum() / (sigma * sigma * sigma);
        }
        // gk now holds dL/dK o K; reuse it as the symmetric distance gradient.
        gk *= -2.0 / (2.0 * sigma * sigma);
        if (!med[k].pairs.empty()) {
            const double share = gsigma / static_cast<double>(med[k].pairs.size());
            for (const auto& [i, j] : med[k].pairs) {
                const double dist = std::sqrt(sq[k](i, j));
                if (dist > 0.0) {
                    gk(i, j) += share / (2.0 * dist);
                    gk(j, i) += share / (2.0 * dist);
                }
            }
        }
        gk.diagonal().setZero();
        const Matrix& g = grams_[k];
        // dD_ij/dw_i = 2 w_i G_ii - 2 w_j G_ij
        gw += 2.0 * w.cwiseProduct(g.diagonal()).cwiseProduct(gk.rowwise().sum());
        gw -= 2.0 * (gk.cwiseProduct(g) * w);
    }
    const double inner = gw.dot(w) / md;
    *grad = w.cwiseProduct(gw - Eigen::VectorXd::Constant(m_, inner));
    return value;
}

} // namespace sgnn::cvd
