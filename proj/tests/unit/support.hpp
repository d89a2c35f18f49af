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

#include "cvd/hsic.hpp"
#include "gnn/params.hpp"
#include "graph/graph.hpp"
#include "tensor/ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace sgnn::testing {

inline constexpr double fd_step = 1e-5;
inline constexpr double fd_rel = 1e-4;
// Entries whose gradient is this small are compared absolutely.
inline constexpr double fd_abs_floor = 1e-8;

inline auto random_matrix(Index rows, Index cols, Rng& rng, double lo = -1.0,
                          double hi = 1.0) -> Matrix
{
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = rng.uniform(lo, hi);
    }
    return m;
}

// Worst violation of |analytic - numeric| <= fd_rel * max(|a|, |n|) + floor,
// expressed as a ratio (<= 1 passes).
inline auto fd_ratio(const Matrix& analytic, const Matrix& numeric) -> double
{
    double worst = 0.0;
    for (Index i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data()[i];
        const double n = numeric.data()[i];
        const double tol = fd_rel * std::max(std::abs(a), std::abs(n)) + fd_abs_floor;
        worst = std::max(worst, std::abs(a - n) / tol);
    }
    return worst;
}

// f builds a scalar from leaf variables on a fresh tape. Returns the worst
// ratio over all inputs; central differences, step fd_step.
inline auto gradient_check(
    const std::function<Var(Tape&, const std::vector<Var>&)>& f,
    std::vector<Matrix> inputs) -> double
{
    std::vector<Matrix> analytic;
    {
        Tape t;
        std::vector<Var> vars;
        for (const auto& m : inputs) {
            vars.push_back(t.variable(m));
        }
        Var loss = f(t, vars);
        t.backward(loss);
        for (const auto& v : vars) {
            analytic.push_back(t.grad(v));
        }
    }
    auto eval = [&] {
        Tape t;
        std::vector<Var> vars;
        for (const auto& m : inputs) {
            vars.push_back(t.constant(m));
        }
        return f(t, vars).value()(0, 0);
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < inputs.size(); ++k) {
        Matrix numeric(inputs[k].rows(), inputs[k].cols());
        for (Index i = 0; i < inputs[k].size(); ++i) {
            double& x = inputs[k].data()[i];
            const double saved = x;
            x = saved + fd_step;
            const double up = eval();
            x = saved - fd_step;
            const double down = eval();
            x = saved;
            numeric.data()[i] = (up - down) / (2.0 * fd_step);
        }
        worst = std::max(worst, fd_ratio(analytic[k], numeric));
    }
    return worst;
}

// Gradient check over the trainable parameters of a store.
inline auto parameter_gradient_check(
    ParameterStore& store, const std::function<Var(Tape&, Binding&)>& f) -> double
{
    std::vector<Matrix> analytic;
    {
        Tape t;
        Binding b { t, store };
        Var loss = f(t, b);
        t.backward(loss);
        analytic = b.gradients();
    }
    auto eval = [&] {
        Tape t;
        Binding b { t, store };
        return f(t, b).value()(0, 0);
    };
    double worst = 0.0;
    for (std::size_t k = 0; k < store.size(); ++k) {
        if (!store[k].trainable) {
            continue;
        }
        Matrix& value = store[k].value;
        Matrix numeric(value.rows(), value.cols());
        for (Index i = 0; i < value.size(); ++i) {
            double& x = value.data()[i];
            const double saved = x;
            x = saved + fd_step;
            const double up = eval();
            x = saved - fd_step;
            const double down = eval();
            x = saved;
            numeric.data()[i] = (up - down) / (2.0 * fd_step);
        }
        const Matrix a = analytic[k].size() == 0 ? Matrix::Zero(value.rows(), value.cols())
                                                 : analytic[k];
        worst = std::max(worst, fd_ratio(a, numeric));
    }
    return worst;
}

// Random undirected graph with n nodes, edge probability p and d features.
inline auto random_graph(std::size_t n, double p, Index d, Rng& rng, int label = 0)
    -> graph::Graph
{
    graph::Graph g;
    g.node_count = n;
    for (std::uint32_t u = 0; u < n; ++u) {
        for (std::uint32_t v = u + 1; v < n; ++v) {
            if (rng.bernoulli(p)) {
                g.edges.push_back({ u, v });
            }
        }
    }
    g.features = random_matrix(static_cast<Index>(n), d, rng, 0.0, 1.0);
    g.label = label;
    return g;
}

// Relabels node i as perm[i].
inline auto permute_graph(const graph::Graph& g, const std::vector<std::uint32_t>& perm)
    -> graph::Graph
{
    graph::Graph out = g;
    out.edges.clear();
    for (const auto& e : g.edges) {
        const auto a = perm[e.u];
        const auto b = perm[e.v];
        out.edges.push_back({ std::min(a, b), std::max(a, b) });
    }
    std::sort(out.edges.begin(), out.edges.end());
    for (std::size_t i = 0; i < g.node_count; ++i) {
        out.features.row(perm[i]) = g.features.row(static_cast<Index>(i));
    }
    return out;
}

inline auto random_permutation(std::size_t n, Rng& rng) -> std::vector<std::uint32_t>
{
    std::vector<std::uint32_t> p(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        p[i] = i;
    }
    for (std::size_t i = n; i > 1; --i) {
        std::swap(p[i - 1], p[rng.below(i)]);
    }
    return p;
}

// Batch of `blocks` variable blocks of width d that share one latent
// confounder z per sample: column c is rho*z*(1 + 0.1*(c mod 3)) plus
// independent noise, with a quadratic bump on every fifth sample.
inline auto confounded_blocks(Index m, Index blocks, Index d, double rho, Rng& rng)
    -> Matrix
{
    Matrix h(m, blocks * d);
    for (Index i = 0; i < m; ++i) {
        const double z = rng.uniform(-1.0, 1.0);
        for (Index c = 0; c < h.cols(); ++c) {
            h(i, c) = rho * z * (1.0 + 0.1 * static_cast<double>(c % 3))
                      + (1.0 - rho) * rng.uniform(-1.0, 1.0)
                      + (i % 5 == 0 ? 2.0 * z * z : 0.0);
        }
    }
    return h;
}

// Two blocks where the second is the first plus uniform noise.
inline auto noisy_copy_blocks(Index m, Index d, double noise, Rng& rng) -> Matrix
{
    Matrix h(m, 2 * d);
    for (Index i = 0; i < m; ++i) {
        for (Index c = 0; c < d; ++c) {
            const double x = rng.uniform(-1.0, 1.0);
            h(i, c) = x;
            h(i, d + c) = x + noise * rng.uniform(-1.0, 1.0);
        }
    }
    return h;
}

// Median of the strict upper-triangle Euclidean distances.
inline auto oracle_median(const Matrix& x) -> double
{
    std::vector<double> d;
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = i + 1; j < x.rows(); ++j) {
            d.push_back((x.row(i) - x.row(j)).norm());
        }
    }
    std::sort(d.begin(), d.end());
    const std::size_t n = d.size();
    return n % 2 == 1 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
}

inline auto oracle_kernel(const Matrix& x, double sigma) -> Matrix
{
    const Index m = x.rows();
    Matrix k(m, m);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            double s = 0.0;
            for (Index c = 0; c < x.cols(); ++c) {
                const double t = x(i, c) - x(j, c);
                s += t * t;
            }
            k(i, j) = std::exp(-s / (2.0 * sigma * sigma));
        }
    }
    return k;
}

// (m-1)^-2 tr(KPLP) expanded into plain sums over kernel entries.
inline auto oracle_hsic(const Matrix& u, const Matrix& v, const cvd::HsicConfig& cfg) -> double
{
    const bool fixed = cfg.bandwidth_rule == cvd::BandwidthRule::fixed;
    const Matrix k = oracle_kernel(
        u, fixed ? cfg.fixed_bandwidth : std::max(oracle_median(u), cfg.bandwidth_floor));
    const Matrix l = oracle_kernel(
        v, fixed ? cfg.fixed_bandwidth : std::max(oracle_median(v), cfg.bandwidth_floor));
    const Index m = u.rows();
    const double md = static_cast<double>(m);
    double kl = 0.0;
    double ksum = 0.0;
    double lsum = 0.0;
    double cross = 0.0;
    for (Index i = 0; i < m; ++i) {
        double krow = 0.0;
        double lrow = 0.0;
        for (Index j = 0; j < m; ++j) {
            kl += k(i, j) * l(i, j);
            ksum += k(i, j);
            lsum += l(i, j);
            krow += k(i, j);
            lrow += l(i, j);
        }
        cross += krow * lrow;
    }
    return (kl - 2.0 / md * cross + ksum * lsum / (md * md)) / ((md - 1.0) * (md - 1.0));
}

// Brute-force search over all 5-vertex subsets for an induced house. A
// 5-vertex graph with 6 edges and degrees (3,3,2,2,2) is a house exactly
// when its two degree-3 vertices are adjacent (otherwise it is K_{2,3}).
inline auto oracle_has_induced_house(const graph::Graph& g) -> bool
{
    const std::size_t n = g.node_count;
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (const auto& e : g.edges) {
        adj[e.u][e.v] = 1;
        adj[e.v][e.u] = 1;
    }
    if (n < 5) {
        return false;
    }
    std::vector<std::size_t> s { 0, 1, 2, 3, 4 };
    while (true) {
        int edges = 0;
        int deg[5] = {};
        for (int a = 0; a < 5; ++a) {
            for (int b = a + 1; b < 5; ++b) {
                if (adj[s[a]][s[b]] != 0) {
                    ++edges;
                    ++deg[a];
                    ++deg[b];
                }
            }
        }
        if (edges == 6) {
            std::vector<int> hubs;
            bool twos = true;
            for (int a = 0; a < 5; ++a) {
                if (deg[a] == 3) {
                    hubs.push_back(a);
                } else if (deg[a] != 2) {
                    twos = false;
                }
            }
            if (twos && hubs.size() == 2 && adj[s[hubs[0]]][s[hubs[1]]] != 0) {
                return true;
            }
        }
        // next combination in lexicographic order
        int i = 4;
        while (i >= 0 && s[static_cast<std::size_t>(i)] == n - 5 + static_cast<std::size_t>(i)) {
            --i;
        }
        if (i < 0) {
            return false;
        }
        ++s[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < 5; ++j) {
            s[static_cast<std::size_t>(j)] = s[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
}

} // namespace sgnn::testing
