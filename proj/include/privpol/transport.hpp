#pragma once

// Discrete optimal transport between two histograms under a ground-cost matrix,
// and the Word Mover's Distance built on it.
//
// The solvers are templated on the scalar type and take plain Eigen dense
// objects; the NBowDoc overloads at the bottom fix Scalar = double.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "privpol/embedding.hpp"

namespace privpol {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct TransportSolution {
    Scalar cost{};
    MatrixX<Scalar> plan;
    std::size_t iterations = 0;
};

class InstanceTooLarge : public std::length_error {
public:
    InstanceTooLarge() : std::length_error("instance too large; use wmd_sinkhorn") {}
};

class SinkhornDiverged : public std::runtime_error {
public:
    SinkhornDiverged() : std::runtime_error("sinkhorn diverged") {}
};

namespace detail {

// Basis of the transportation simplex: m + n - 1 cells that form a spanning
// tree of the bipartite row/column graph.
struct BasisCell {
    Eigen::Index row;
    Eigen::Index col;
};

}  // namespace detail

/// Exact balanced transport by the transportation simplex (northwest-corner
/// start, MODI pricing). The demand vector is rescaled to the supply total, so
/// inputs only need to agree up to rounding.
template <typename Scalar>
TransportSolution<Scalar> transport_exact(const VectorX<Scalar>& supply, const VectorX<Scalar>& demand, const MatrixX<Scalar>& cost) {
    using detail::BasisCell;
    using Index = Eigen::Index;
    const Index m = supply.size();
    const Index n = demand.size();
    if (m == 0 || n == 0) throw std::invalid_argument("transport_exact: empty marginal");
    if (cost.rows() != m || cost.cols() != n) throw std::invalid_argument("transport_exact: cost shape mismatch");
    if ((supply.array() < 0).any() || (demand.array() < 0).any()) throw std::invalid_argument("transport_exact: negative mass");

    const Scalar total = supply.sum();
    VectorX<Scalar> s = supply;
    VectorX<Scalar> d = demand * (total / demand.sum());

    TransportSolution<Scalar> out;
    out.plan = MatrixX<Scalar>::Zero(m, n);
    auto& flow = out.plan;
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> in_basis = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(m, n, false);
    std::vector<BasisCell> basis;
    basis.reserve(static_cast<std::size_t>(m + n - 1));

    {
        Index i = 0, j = 0;
        while (true) {
            const Scalar x = std::min(s(i), d(j));
            flow(i, j) = x;
            s(i) -= x;
            d(j) -= x;
            basis.push_back({i, j});
            in_basis(i, j) = true;
            if (i == m - 1 && j == n - 1) break;
            if (j == n - 1) ++i;
            else if (i == m - 1) ++j;
            else if (s(i) <= d(j)) ++i;
            else ++j;
        }
    }

    const Index nodes = m + n;
    std::vector<std::vector<std::pair<Index, std::size_t>>> adj(static_cast<std::size_t>(nodes));
    std::vector<Index> parent_node(static_cast<std::size_t>(nodes));
    std::vector<std::size_t> parent_edge(static_cast<std::size_t>(nodes));
    std::vector<Index> queue;
    queue.reserve(static_cast<std::size_t>(nodes));
    VectorX<Scalar> u(m), v(n);

    const Scalar tol = Scalar(1e-12) * (Scalar(1) + cost.cwiseAbs().maxCoeff());
    const std::size_t max_iterations = 50 * static_cast<std::size_t>(m * n) + 1000;
    std::size_t degenerate_run = 0;

    for (std::size_t iter = 0;; ++iter) {
        if (iter > max_iterations) throw std::runtime_error("transport_exact: iteration limit reached");
        out.iterations = iter;

        for (auto& a : adj) a.clear();
        for (std::size_t e = 0; e < basis.size(); ++e) {
            adj[static_cast<std::size_t>(basis[e].row)].push_back({m + basis[e].col, e});
            adj[static_cast<std::size_t>(m + basis[e].col)].push_back({basis[e].row, e});
        }

        // potentials: u_i + v_j = c_ij on basic cells, u_0 = 0
        std::vector<bool> seen(static_cast<std::size_t>(nodes), false);
        queue.assign(1, 0);
        seen[0] = true;
        u(0) = 0;
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const Index node = queue[q];
            for (const auto& [next, e] : adj[static_cast<std::size_t>(node)]) {
                if (seen[static_cast<std::size_t>(next)]) continue;
                seen[static_cast<std::size_t>(next)] = true;
                const auto& cell = basis[e];
                if (next >= m) v(next - m) = cost(cell.row, cell.col) - u(cell.row);
                else u(next) = cost(cell.row, cell.col) - v(cell.col);
                queue.push_back(next);
            }
        }

        // pricing: Dantzig, falling back to Bland after a run of degenerate pivots
        const bool bland = degenerate_run > static_cast<std::size_t>(nodes);
        Index enter_i = -1, enter_j = -1;
        Scalar best = -tol;
        for (Index i = 0; i < m && !(bland && enter_i >= 0); ++i) {
            for (Index j = 0; j < n; ++j) {
                if (in_basis(i, j)) continue;
                const Scalar r = cost(i, j) - u(i) - v(j);
                if (r < best) {
                    best = r;
                    enter_i = i;
                    enter_j = j;
                    if (bland) break;
                }
            }
        }
        if (enter_i < 0) break;

        // tree path from column node enter_j to row node enter_i
        std::fill(seen.begin(), seen.end(), false);
        queue.assign(1, m + enter_j);
        seen[static_cast<std::size_t>(m + enter_j)] = true;
        for (std::size_t q = 0; q < queue.size() && !seen[static_cast<std::size_t>(enter_i)]; ++q) {
            const Index node = queue[q];
            for (const auto& [next, e] : adj[static_cast<std::size_t>(node)]) {
                if (seen[static_cast<std::size_t>(next)]) continue;
                seen[static_cast<std::size_t>(next)] = true;
                parent_node[static_cast<std::size_t>(next)] = node;
                parent_edge[static_cast<std::size_t>(next)] = e;
                queue.push_back(next);
            }
        }
        // walk back from the row node; edges alternate -, +, -, ... starting at the column end,
        // so walking from the row end the signs are also -, +, ..., - (odd length)
        std::vector<std::size_t> cycle;
        for (Index node = enter_i; node != m + enter_j; node = parent_node[static_cast<std::size_t>(node)])
            cycle.push_back(parent_edge[static_cast<std::size_t>(node)]);

        Scalar theta = std::numeric_limits<Scalar>::infinity();
        std::size_t leave_pos = 0;
        for (std::size_t k = 0; k < cycle.size(); k += 2) {
            const auto& cell = basis[cycle[k]];
            const Scalar f = flow(cell.row, cell.col);
            const bool better = f < theta ||
                                (bland && f == theta && cell.row * n + cell.col < basis[cycle[leave_pos]].row * n + basis[cycle[leave_pos]].col);
            if (better) {
                theta = f;
                leave_pos = k;
            }
        }
        for (std::size_t k = 0; k < cycle.size(); ++k) {
            const auto& cell = basis[cycle[k]];
            flow(cell.row, cell.col) += (k % 2 == 0) ? -theta : theta;
        }
        flow(enter_i, enter_j) = theta;
        degenerate_run = theta > Scalar(0) ? 0 : degenerate_run + 1;

        const auto leaving = basis[cycle[leave_pos]];
        flow(leaving.row, leaving.col) = Scalar(0);
        in_basis(leaving.row, leaving.col) = false;
        in_basis(enter_i, enter_j) = true;
        basis[cycle[leave_pos]] = {enter_i, enter_j};
    }

    flow = flow.cwiseMax(Scalar(0));
    out.cost = flow.cwiseProduct(cost).sum();
    return out;
}

struct SinkhornOptions {
    double epsilon = 0.05;
    int max_iters = 500;
    double tol = 1e-8;
};

template <typename Scalar>
struct SinkhornSolution : TransportSolution<Scalar> {
    bool converged = false;
    bool log_domain = false;
    Scalar marginal_error{};
};

namespace detail {

/// Projects a nonnegative plan onto the transport polytope while changing it as
/// little as possible (row/column down-scaling, then a rank-one correction).
template <typename Scalar>
MatrixX<Scalar> round_to_polytope(MatrixX<Scalar> plan, const VectorX<Scalar>& a, const VectorX<Scalar>& b) {
    const VectorX<Scalar> rows = plan.rowwise().sum();
    for (Eigen::Index i = 0; i < plan.rows(); ++i) {
        if (rows(i) > a(i)) plan.row(i) *= a(i) / rows(i);
    }
    const VectorX<Scalar> cols = plan.colwise().sum().transpose();
    for (Eigen::Index j = 0; j < plan.cols(); ++j) {
        if (cols(j) > b(j)) plan.col(j) *= b(j) / cols(j);
    }
    const VectorX<Scalar> err_r = (a - plan.rowwise().sum()).cwiseMax(Scalar(0));
    const VectorX<Scalar> err_c = (b - plan.colwise().sum().transpose()).cwiseMax(Scalar(0));
    const Scalar mass = err_c.sum();
    if (mass > Scalar(0)) plan += err_r * err_c.transpose() / mass;
    return plan;
}

template <typename Scalar>
Scalar log_sum_exp(const VectorX<Scalar>& x) {
    const Scalar mx = x.maxCoeff();
    if (!std::isfinite(mx)) return mx;
    return mx + std::log((x.array() - mx).exp().sum());
}

}  // namespace detail

/// Entropic-regularized transport by Sinkhorn scaling. Falls back to
/// log-domain updates when the kernel under- or overflows. The returned plan is
/// rounded onto the exact transport polytope and `cost` is its transport cost
/// (the entropy term is not included).
template <typename Scalar>
SinkhornSolution<Scalar> transport_sinkhorn(const VectorX<Scalar>& a, const VectorX<Scalar>& b, const MatrixX<Scalar>& cost,
                                            const SinkhornOptions& opt = {}) {
    if (a.size() == 0 || b.size() == 0) throw std::invalid_argument("transport_sinkhorn: empty marginal");
    if (cost.rows() != a.size() || cost.cols() != b.size()) throw std::invalid_argument("transport_sinkhorn: cost shape mismatch");
    if (!(opt.epsilon > 0)) throw std::invalid_argument("transport_sinkhorn: epsilon must be positive");
    const Scalar eps = static_cast<Scalar>(opt.epsilon);
    const VectorX<Scalar> bb = b * (a.sum() / b.sum());

    SinkhornSolution<Scalar> out;
    MatrixX<Scalar> plan;

    // scaling form; Eigen's vectorized exp clamps instead of underflowing, so
    // kernels that leave the normal range go straight to the log domain
    const bool representable = (cost / eps).maxCoeff() < -std::log(std::numeric_limits<Scalar>::min());
    if (representable) {
        const MatrixX<Scalar> kernel = (-cost / eps).array().exp().matrix();
        VectorX<Scalar> u = VectorX<Scalar>::Ones(a.size());
        VectorX<Scalar> v = VectorX<Scalar>::Ones(bb.size());
        bool healthy = true;
        int it = 0;
        for (; it < opt.max_iters; ++it) {
            const VectorX<Scalar> kv = kernel * v;
            if ((kv.array() <= Scalar(0)).any()) { healthy = false; break; }
            u = a.cwiseQuotient(kv);
            const VectorX<Scalar> ktu = kernel.transpose() * u;
            if ((ktu.array() <= Scalar(0)).any()) { healthy = false; break; }
            v = bb.cwiseQuotient(ktu);
            if (!u.allFinite() || !v.allFinite()) { healthy = false; break; }
            out.marginal_error = (u.cwiseProduct(kernel * v) - a).cwiseAbs().sum();
            if (out.marginal_error < static_cast<Scalar>(opt.tol)) { out.converged = true; ++it; break; }
        }
        if (healthy) {
            plan = u.asDiagonal() * kernel * v.asDiagonal();
            healthy = plan.allFinite();
        }
        out.iterations = static_cast<std::size_t>(it);
        if (!healthy) plan.resize(0, 0);
    }

    if (plan.size() == 0) {
        out.log_domain = true;
        out.converged = false;
        const Eigen::Index m = a.size(), n = bb.size();
        const VectorX<Scalar> log_a = a.array().log().matrix();
        const VectorX<Scalar> log_b = bb.array().log().matrix();
        VectorX<Scalar> f = VectorX<Scalar>::Zero(m), g = VectorX<Scalar>::Zero(n);
        VectorX<Scalar> scratch_n(n), scratch_m(m);
        int it = 0;
        for (; it < opt.max_iters; ++it) {
            for (Eigen::Index i = 0; i < m; ++i) {
                scratch_n = (g - cost.row(i).transpose()) / eps;
                f(i) = eps * log_a(i) - eps * detail::log_sum_exp(scratch_n);
            }
            for (Eigen::Index j = 0; j < n; ++j) {
                scratch_m = (f - cost.col(j)) / eps;
                g(j) = eps * log_b(j) - eps * detail::log_sum_exp(scratch_m);
            }
            if (!f.allFinite() || !g.allFinite()) throw SinkhornDiverged();
            Scalar err = 0;
            for (Eigen::Index i = 0; i < m; ++i) {
                scratch_n = ((f(i) + g.array() - cost.row(i).transpose().array()) / eps).matrix();
                err += std::abs(std::exp(detail::log_sum_exp(scratch_n)) - a(i));
            }
            out.marginal_error = err;
            if (err < static_cast<Scalar>(opt.tol)) { out.converged = true; ++it; break; }
        }
        out.iterations = static_cast<std::size_t>(it);
        plan.resize(m, n);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j) plan(i, j) = std::exp((f(i) + g(j) - cost(i, j)) / eps);
        if (!plan.allFinite()) throw SinkhornDiverged();
    }

    out.plan = detail::round_to_polytope<Scalar>(std::move(plan), a, bb);
    out.cost = out.plan.cwiseProduct(cost).sum();
    return out;
}

/// max of the two one-sided relaxations, each letting every unit of mass go to
/// its nearest counterpart.
template <typename Scalar>
Scalar relaxed_transport_bound(const VectorX<Scalar>& a, const VectorX<Scalar>& b, const MatrixX<Scalar>& cost) {
    const Scalar left = a.dot(cost.rowwise().minCoeff());
    const Scalar right = b.dot(cost.colwise().minCoeff().transpose());
    return std::max(left, right);
}

/// Pairwise Euclidean distances between the rows of x and the rows of y.
/// Differences are formed explicitly so identical rows give exactly 0.
template <typename DerivedX, typename DerivedY>
MatrixX<typename DerivedX::Scalar> pairwise_euclidean(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
    using Scalar = typename DerivedX::Scalar;
    MatrixX<Scalar> out(x.rows(), y.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < y.rows(); ++j) out(i, j) = (x.row(i) - y.row(j)).norm();
    return out;
}

// -- Word Mover's Distance over NBowDocs ------------------------------------

constexpr std::size_t kDefaultExactSupportCap = 128;

Eigen::MatrixXd cost_matrix(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb);

struct WmdResult {
    double distance = 0.0;
    Eigen::MatrixXd plan;
};

/// Throws InstanceTooLarge when |a| + |b| exceeds support_cap.
WmdResult wmd_exact(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb, std::size_t support_cap = kDefaultExactSupportCap);

double wmd_sinkhorn(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb, const SinkhornOptions& opt = {});

double rwmd_lower_bound(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb);

/// Exact when the instance fits under the cap, Sinkhorn otherwise.
double wmd(const NBowDoc& a, const NBowDoc& b, const WordEmbedding& emb, std::size_t support_cap = kDefaultExactSupportCap);

}  // namespace privpol
