#include "cglearn/solvers.hpp"

#include "cglearn/errors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

namespace cglearn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::pair<int, int>> all_pairs(int n) {
    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    return pairs;
}

Eigen::SparseMatrix<double> structure_matrix(int n, const std::vector<std::pair<int, int>>& pairs) {
    const auto E = static_cast<Eigen::Index>(pairs.size());
    Eigen::SparseMatrix<double> P(n + E, E);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(3 * pairs.size());
    const double s2 = std::sqrt(2.0);
    for (Eigen::Index e = 0; e < E; ++e) {
        auto [i, j] = pairs[e];
        trips.emplace_back(i, e, 1.0);
        trips.emplace_back(j, e, 1.0);
        trips.emplace_back(n + e, e, -s2);
    }
    P.setFromTriplets(trips.begin(), trips.end());
    return P;
}

// largest eigenvalue of P^T P by power iteration; deterministic start
double sq_norm_estimate(const Eigen::SparseMatrix<double>& P) {
    const auto E = P.cols();
    if (E == 0) return 0.0;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(E) / std::sqrt(static_cast<double>(E));
    double lam = 0.0;
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd u = P.transpose() * (P * v).eval();
        double nrm = u.norm();
        if (nrm <= 0.0) return 0.0;
        double lam_new = v.dot(u);
        v = u / nrm;
        if (it > 5 && std::abs(lam_new - lam) <= 1e-10 * std::max(1.0, lam_new)) {
            lam = lam_new;
            break;
        }
        lam = lam_new;
    }
    return lam * 1.02;
}

double kkt_residual_nnls(const Eigen::VectorXd& a, const Eigen::VectorXd& grad) {
    double r = 0.0;
    for (Eigen::Index e = 0; e < a.size(); ++e) {
        if (a(e) > 0.0) r = std::max(r, std::abs(grad(e)));
        else r = std::max(r, std::max(0.0, -grad(e)));
    }
    return r;
}

} // namespace

CglVectorization cgl_vectorize(const Eigen::MatrixXd& L_hat) {
    if (L_hat.rows() != L_hat.cols()) fail(errc::not_square, "target must be square");
    if (!L_hat.allFinite()) fail(errc::non_finite, "target has non-finite entries");
    CglVectorization v;
    v.n = static_cast<int>(L_hat.rows());
    v.pairs = all_pairs(v.n);
    v.P = structure_matrix(v.n, v.pairs);
    v.b_hat = lift_symmetric((L_hat + L_hat.transpose()) * 0.5);
    return v;
}

Eigen::VectorXd lift_symmetric(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    const Eigen::Index E = static_cast<Eigen::Index>(n) * (n - 1) / 2;
    Eigen::VectorXd b(n + E);
    for (int i = 0; i < n; ++i) b(i) = m(i, i);
    const double s2 = std::sqrt(2.0);
    Eigen::Index e = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) b(n + e++) = s2 * m(j, i); // strict lower triangle
    return b;
}

Eigen::MatrixXd assemble_from_weights(int n, const std::vector<std::pair<int, int>>& pairs, const Eigen::VectorXd& a) {
    if (static_cast<std::size_t>(a.size()) != pairs.size()) fail(errc::dimension_mismatch, "weight vector does not match pair list");
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t e = 0; e < pairs.size(); ++e) {
        auto [i, j] = pairs[e];
        double w = a(static_cast<Eigen::Index>(e));
        L(i, j) -= w;
        L(j, i) -= w;
        L(i, i) += w;
        L(j, j) += w;
    }
    return L;
}

double distance_value(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Distance d) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) fail(errc::dimension_mismatch, "distance needs equal shapes");
    if (d == Distance::FrobeniusSq) return (A - B).squaredNorm();
    return (A - B).cwiseAbs().maxCoeff();
}

NnlsResult nonneg_l1_least_squares(const Eigen::SparseMatrix<double>& P, const Eigen::VectorXd& b_hat, double beta,
                                   double opt_tol, int max_iters, const Eigen::VectorXd* weights,
                                   const Eigen::VectorXd* warm_start) {
    if (P.rows() != b_hat.size()) fail(errc::dimension_mismatch, "P rows must match b_hat length");
    if (beta < 0.0) fail(errc::invalid_params, "beta must be >= 0");
    const auto E = P.cols();
    NnlsResult res;
    if (E == 0) {
        res.a = Eigen::VectorXd(0);
        res.converged = true;
        res.objective = b_hat.squaredNorm();
        return res;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Constant(E, 4.0 * beta);
    if (weights) {
        if (weights->size() != E) fail(errc::dimension_mismatch, "weight vector length mismatch");
        c = 4.0 * beta * (*weights);
    }

    const Eigen::SparseMatrix<double> Pt = P.transpose();
    const double lam = sq_norm_estimate(P);
    const double step = lam > 0.0 ? 1.0 / (2.0 * lam) : 1.0;
    const double kkt_tol = opt_tol * (1.0 + b_hat.norm());

    auto objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& resid) {
        resid = P * x - b_hat;
        return resid.squaredNorm() + c.dot(x);
    };

    Eigen::VectorXd a = warm_start && warm_start->size() == E ? warm_start->cwiseMax(0.0)
                                                              : Eigen::VectorXd::Zero(E).eval();
    Eigen::VectorXd resid;
    double obj_a = objective(a, resid);
    Eigen::VectorXd y = a, a_prev = a, z_prev = a;
    double t_k = 1.0;

    int it = 0;
    for (; it < max_iters; ++it) {
        Eigen::VectorXd grad_y = 2.0 * (Pt * (P * y - b_hat).eval());
        Eigen::VectorXd z = (y - step * grad_y - step * c).cwiseMax(0.0);

        Eigen::VectorXd resid_z;
        double obj_z = objective(z, resid_z);

        a_prev = a;
        if (obj_z <= obj_a) { // monotone output sequence
            a = z;
            obj_a = obj_z;
        }

        // adaptive restart on the generalized-gradient direction
        if ((y - z).dot(z - z_prev) > 0.0) {
            t_k = 1.0;
            y = a;
        } else {
            double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_k * t_k));
            // monotone FISTA: extrapolate from the accepted iterate
            y = a + (t_k / t_next) * (z - a) + ((t_k - 1.0) / t_next) * (a - a_prev);
            t_k = t_next;
        }
        z_prev = z;

        if (it % 25 == 24 || it == max_iters - 1) {
            Eigen::VectorXd grad_a = 2.0 * (Pt * (P * a - b_hat).eval()) + c;
            double kkt = kkt_residual_nnls(a, grad_a);
            if (kkt <= kkt_tol) {
                res.converged = true;
                res.kkt_residual = kkt;
                ++it;
                break;
            }
            res.kkt_residual = kkt;
        }
    }
    res.a = a;
    res.iterations = it;
    res.objective = obj_a;
    if (!res.converged) {
        Eigen::VectorXd grad_a = 2.0 * (Pt * (P * a - b_hat).eval()) + c;
        res.kkt_residual = kkt_residual_nnls(a, grad_a);
        res.converged = res.kkt_residual <= kkt_tol;
    }
    return res;
}

namespace {

// projection onto the l1 ball of radius 1 (sort-based)
Eigen::VectorXd l1_ball_projection(const Eigen::VectorXd& y) {
    double l1 = y.lpNorm<1>();
    if (l1 <= 1.0) return y;
    std::vector<double> u(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) u[i] = std::abs(y(i));
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    int rho = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cum += u[k];
        double t = (cum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) {
            rho = static_cast<int>(k + 1);
            theta = t;
        }
    }
    (void)rho;
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double mag = std::max(std::abs(y(i)) - theta, 0.0);
        out(i) = y(i) >= 0.0 ? mag : -mag;
    }
    return out;
}

} // namespace

NnlsResult maxnorm_l1_fit(int n, const std::vector<std::pair<int, int>>& pairs, const Eigen::MatrixXd& L_hat,
                          double beta, double opt_tol, int max_iters, const Eigen::VectorXd* weights) {
    const auto E = static_cast<Eigen::Index>(pairs.size());
    // K stacks one residual entry per diagonal element and per pair (no sqrt2)
    Eigen::SparseMatrix<double> K(n + E, E);
    {
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(3 * pairs.size());
        for (Eigen::Index e = 0; e < E; ++e) {
            auto [i, j] = pairs[e];
            trips.emplace_back(i, e, 1.0);
            trips.emplace_back(j, e, 1.0);
            trips.emplace_back(n + e, e, -1.0);
        }
        K.setFromTriplets(trips.begin(), trips.end());
    }
    Eigen::MatrixXd sym = (L_hat + L_hat.transpose()) * 0.5;
    Eigen::VectorXd cvec(n + E);
    for (int i = 0; i < n; ++i) cvec(i) = sym(i, i);
    for (Eigen::Index e = 0; e < E; ++e) cvec(n + e) = sym(pairs[e].second, pairs[e].first);

    Eigen::VectorXd pen = Eigen::VectorXd::Constant(E, 4.0 * beta);
    if (weights) pen = 4.0 * beta * (*weights);

    const Eigen::SparseMatrix<double> Kt = K.transpose();
    const double knorm = std::sqrt(std::max(sq_norm_estimate(K), 1e-30));
    const double tau = 0.95 / knorm, sigma = 0.95 / knorm;

    NnlsResult res;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(E), abar = a, y = Eigen::VectorXd::Zero(n + E);
    double best_primal = kInf;
    Eigen::VectorXd best_a = a;
    const double tol = opt_tol * (1.0 + cvec.cwiseAbs().maxCoeff());

    int it = 0;
    for (; it < max_iters; ++it) {
        y = l1_ball_projection(y + sigma * (K * abar - cvec));
        Eigen::VectorXd a_new = (a - tau * (Kt * y + pen)).cwiseMax(0.0);
        abar = 2.0 * a_new - a;
        a = a_new;

        if (it % 25 == 24 || it == max_iters - 1) {
            double primal = (K * a - cvec).cwiseAbs().maxCoeff() + pen.dot(a);
            if (primal < best_primal) {
                best_primal = primal;
                best_a = a;
            }
            Eigen::VectorXd dual_slack = Kt * y + pen;
            double dual_viol = std::max(0.0, -dual_slack.minCoeff());
            double dual_val = -cvec.dot(y);
            double gap = primal - dual_val;
            res.kkt_residual = std::max(gap, dual_viol * (1.0 + a.lpNorm<1>()));
            if (gap <= tol * (1.0 + std::abs(primal) + std::abs(dual_val)) && dual_viol <= opt_tol * (1.0 + 4.0 * beta)) {
                res.converged = true;
                ++it;
                break;
            }
        }
    }
    res.a = res.converged ? a : best_a;
    res.iterations = it;
    res.objective = (K * res.a - cvec).cwiseAbs().maxCoeff() + pen.dot(res.a);
    return res;
}

Eigen::VectorXd ordered_projection(const Eigen::VectorXd& v, int eta, bool fix_last_to_one) {
    if (eta < 1) fail(errc::invalid_params, "eta must be >= 1");
    const auto n = v.size();
    Eigen::VectorXd out = v;
    if (n == 0) return out;

    auto pava = [](std::vector<double>& vals) { // in-place nondecreasing regression
        std::vector<double> bv;
        std::vector<int> bc;
        for (double x : vals) {
            bv.push_back(x);
            bc.push_back(1);
            while (bv.size() >= 2 && bv[bv.size() - 1] < bv[bv.size() - 2]) {
                double merged = (bv[bv.size() - 1] * bc[bc.size() - 1] + bv[bv.size() - 2] * bc[bc.size() - 2]) /
                                (bc[bc.size() - 1] + bc[bc.size() - 2]);
                int cnt = bc[bc.size() - 1] + bc[bc.size() - 2];
                bv.pop_back(); bv.pop_back(); bc.pop_back(); bc.pop_back();
                bv.push_back(merged);
                bc.push_back(cnt);
            }
        }
        std::size_t k = 0;
        for (std::size_t b = 0; b < bv.size(); ++b)
            for (int r = 0; r < bc[b]; ++r) vals[k++] = bv[b];
    };

    for (int r = 0; r < eta; ++r) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = r; i < n; i += eta) idx.push_back(i);
        if (idx.empty()) continue;
        bool pinned = fix_last_to_one && idx.back() == n - 1;
        std::size_t m = pinned ? idx.size() - 1 : idx.size();
        std::vector<double> vals(m);
        for (std::size_t k = 0; k < m; ++k) vals[k] = v(idx[k]);
        pava(vals);
        for (std::size_t k = 0; k < m; ++k) out(idx[k]) = pinned ? std::min(vals[k], 1.0) : vals[k];
        if (pinned) out(n - 1) = 1.0;
    }
    if (fix_last_to_one) out(n - 1) = 1.0;
    return out;
}

namespace {

Eigen::VectorXd edge_weights_of(const Eigen::MatrixXd& L, const std::vector<std::pair<int, int>>& pairs) {
    Eigen::VectorXd a(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t e = 0; e < pairs.size(); ++e) a(static_cast<Eigen::Index>(e)) = std::max(0.0, -L(pairs[e].first, pairs[e].second));
    return a;
}

struct OstWork { // shared structure across passes of one template problem
    int n = 0;
    std::vector<std::pair<int, int>> pairs;
    Eigen::SparseMatrix<double> P;
};

// One block-coordinate solve of the regularized objective at fixed weights.
CglSolution ost_regularized(const OstWork& wk, const Eigen::MatrixXd& U, const SolverConfig& cfg, double beta,
                            const Eigen::VectorXd& w, const Eigen::VectorXd* warm_a = nullptr,
                            const Eigen::VectorXd* warm_g = nullptr) {
    const int n = wk.n;
    Eigen::VectorXd gamma(n);
    if (warm_g && warm_g->size() == n) gamma = *warm_g;
    else {
        for (int i = 0; i < n; ++i) gamma(i) = n > 1 ? static_cast<double>(i) / (n - 1) : 1.0;
        gamma(n - 1) = 1.0;
    }
    Eigen::VectorXd a = warm_a && warm_a->size() == wk.P.cols() ? *warm_a : Eigen::VectorXd::Zero(wk.P.cols()).eval();

    CglSolution sol;
    auto& dg = sol.diagnostics;
    const int outer_cap = std::max(1, std::min(500, cfg.max_iters));
    double obj_prev = kInf;
    Eigen::MatrixXd L = assemble_from_weights(n, wk.pairs, a);
    bool bcd_converged = false;
    bool inner_ok = true;

    for (int outer = 0; outer < outer_cap; ++outer) {
        Eigen::MatrixXd target = U * gamma.asDiagonal() * U.transpose();
        Eigen::VectorXd b_hat = lift_symmetric(target);
        NnlsResult r = nonneg_l1_least_squares(wk.P, b_hat, beta, cfg.opt_tol, cfg.max_iters, &w, &a);
        a = r.a;
        dg.iterations += r.iterations;
        dg.kkt_residual = r.kkt_residual;
        inner_ok = inner_ok && r.converged;
        L = assemble_from_weights(n, wk.pairs, a);

        Eigen::VectorXd gamma_hat(n);
        for (int i = 0; i < n; ++i) gamma_hat(i) = U.col(i).dot(L * U.col(i));
        if (cfg.ordering == Ordering::LagEta) {
            gamma = ordered_projection(gamma_hat, cfg.eta, true);
        } else {
            gamma = gamma_hat;
            gamma(n - 1) = 1.0;
        }

        Eigen::MatrixXd fit = U * gamma.asDiagonal() * U.transpose();
        double obj = (L - fit).squaredNorm() + 4.0 * beta * w.dot(a);
        dg.objective_history.push_back(obj);
        ++dg.outer_iterations;
        if (std::isfinite(obj_prev)) {
            if (obj > obj_prev + 1e-9 * std::max(1.0, std::abs(obj_prev))) dg.monotone = false;
            if (std::abs(obj_prev - obj) <= cfg.opt_tol * std::max(1.0, std::abs(obj_prev))) {
                obj_prev = obj;
                bcd_converged = true;
                break;
            }
        }
        obj_prev = obj;
    }

    sol.L_star = L;
    sol.gamma_star = gamma;
    dg.objective = obj_prev;
    dg.converged = bcd_converged && inner_ok;
    dg.residual = distance_value(L, (U * gamma.asDiagonal() * U.transpose()).eval(), cfg.distance);
    return sol;
}

void check_templates(const Eigen::MatrixXd& U, const SolverConfig& cfg) {
    if (U.rows() != U.cols()) fail(errc::not_square, "template matrix must be square");
    if (U.rows() < 2) fail(errc::invalid_params, "templates need N >= 2");
    if (!U.allFinite()) fail(errc::non_finite, "templates must be finite");
    double dev = (U.transpose() * U - Eigen::MatrixXd::Identity(U.cols(), U.cols())).cwiseAbs().maxCoeff();
    if (dev > 1e-6) fail(errc::invalid_params, "template columns must be orthonormal");
    if (cfg.eta < 1 || cfg.eta > U.rows() - 1) fail(errc::invalid_params, "eta must be in [1, N-1]");
    if (!(cfg.opt_tol > 0.0)) fail(errc::invalid_params, "opt_tol must be > 0");
}

// Constraint form at one epsilon: largest beta whose residual stays within
// epsilon (log-scale bisection), weights fixed. Assumes eps is feasible, i.e.
// the floor solve meets it.
struct ConstraintSolve {
    CglSolution solution;
    bool feasible = false;
};

// beta cap: a = 0 is stationary once beta >= max_e (P^T b)_e / (2 w_e) at the
// gamma-ramp target; doubled for slack.
double beta_cap(const OstWork& wk, const Eigen::MatrixXd& U, const Eigen::VectorXd& w) {
    const int n = wk.n;
    Eigen::VectorXd gamma0(n);
    for (int i = 0; i < n; ++i) gamma0(i) = n > 1 ? static_cast<double>(i) / (n - 1) : 1.0;
    Eigen::VectorXd b0 = lift_symmetric((U * gamma0.asDiagonal() * U.transpose()).eval());
    Eigen::VectorXd ptb = wk.P.transpose() * b0;
    double cap = 0.0;
    for (Eigen::Index e = 0; e < ptb.size(); ++e) cap = std::max(cap, ptb(e) / (2.0 * std::max(w(e), 1e-12)));
    return std::max(cap * 2.0, 1e-8);
}

// Smallest residual the block-coordinate scheme attains (near-zero l1 weight).
CglSolution floor_solve(const OstWork& wk, const Eigen::MatrixXd& U, const SolverConfig& cfg,
                        const Eigen::VectorXd& w) {
    return ost_regularized(wk, U, cfg, beta_cap(wk, U, w) * 1e-9, w);
}

ConstraintSolve constrained_pass(const OstWork& wk, const Eigen::MatrixXd& U, const SolverConfig& cfg, double eps,
                                 const Eigen::VectorXd& w) {
    const double cap = beta_cap(wk, U, w);
    const double floor_beta = cap * 1e-9;

    ConstraintSolve out;
    CglSolution base = ost_regularized(wk, U, cfg, floor_beta, w);
    if (!(base.diagnostics.residual <= eps)) {
        out.solution = std::move(base);
        return out; // infeasible at this epsilon
    }
    out.feasible = true;
    out.solution = base;
    double best_beta = floor_beta;
    Eigen::VectorXd warm_a = edge_weights_of(base.L_star, wk.pairs);
    Eigen::VectorXd warm_g = *base.gamma_star;
    double lo = floor_beta, hi = cap;
    for (int it = 0; it < 18 && hi / lo > 1.25; ++it) {
        double mid = std::sqrt(lo * hi);
        CglSolution s = ost_regularized(wk, U, cfg, mid, w, &warm_a, &warm_g);
        if (s.diagnostics.residual <= eps) {
            lo = mid;
            if (mid > best_beta) {
                best_beta = mid;
                out.solution = std::move(s);
            }
        } else {
            hi = mid;
        }
    }
    return out;
}

std::vector<double> paper_eps_grid() {
    std::vector<double> g;
    for (int k = 1; k <= 15; ++k) g.push_back(0.002 * k); // 0.002 .. 0.03
    for (int r = 1; 0.03 + 0.005 * r <= 100.0; ++r) g.push_back(0.03 + 0.005 * r);
    return g;
}

// Dense two-phase simplex for min c^T x s.t. A x <= b, x >= 0, Bland's rule
// throughout. Sized for the template LPs (a few hundred rows), not general use.
struct LpOutcome {
    Eigen::VectorXd x;
    bool feasible = false;
    bool bounded = true;
    int pivots = 0;
};

LpOutcome lp_min_ub(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    const int m = static_cast<int>(A.rows());
    const int nv = static_cast<int>(A.cols());
    constexpr double tol = 1e-9;

    int n_art = 0;
    for (int i = 0; i < m; ++i)
        if (b(i) < 0.0) ++n_art;
    const int cols = nv + m + n_art;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, cols + 1);
    std::vector<int> basis(m);
    {
        int art = 0;
        for (int i = 0; i < m; ++i) {
            double sgn = b(i) < 0.0 ? -1.0 : 1.0;
            T.block(i, 0, 1, nv) = sgn * A.row(i);
            T(i, nv + i) = sgn;
            T(i, cols) = sgn * b(i);
            if (b(i) < 0.0) {
                T(i, nv + m + art) = 1.0;
                basis[i] = nv + m + art;
                ++art;
            } else {
                basis[i] = nv + i;
            }
        }
    }

    LpOutcome out;
    std::vector<char> dead(m, 0);

    auto pivot = [&](int pr, int pc) {
        T.row(pr) /= T(pr, pc);
        for (int i = 0; i <= m; ++i) {
            if (i == pr) continue;
            double f = T(i, pc);
            if (f != 0.0) T.row(i) -= f * T.row(pr);
        }
        basis[pr] = pc;
        ++out.pivots;
    };

    // Runs simplex for costs d over the first limit columns; artificials are
    // kept out of phase II by the column limit. Returns false on unbounded
    // rays or a tripped pivot guard.
    auto run = [&](const Eigen::VectorXd& d, int limit) -> bool {
        T.row(m).setZero();
        T.block(m, 0, 1, d.size()) = d.transpose();
        for (int i = 0; i < m; ++i) {
            if (dead[i]) continue;
            double db = basis[i] < d.size() ? d(basis[i]) : 0.0;
            if (db != 0.0) T.row(m) -= db * T.row(i);
        }
        for (int guard = 0; guard < 200000; ++guard) {
            int pc = -1;
            for (int j = 0; j < limit; ++j)
                if (T(m, j) < -tol) {
                    pc = j;
                    break;
                }
            if (pc < 0) return true;
            int pr = -1;
            double best = kInf;
            for (int i = 0; i < m; ++i) {
                if (dead[i] || T(i, pc) <= tol) continue;
                double ratio = T(i, cols) / T(i, pc);
                if (ratio < best - 1e-12 || (ratio < best + 1e-12 && (pr < 0 || basis[i] < basis[pr]))) {
                    best = ratio;
                    pr = i;
                }
            }
            if (pr < 0) {
                out.bounded = false;
                return false;
            }
            pivot(pr, pc);
        }
        return false;
    };

    if (n_art > 0) {
        Eigen::VectorXd d1 = Eigen::VectorXd::Zero(cols);
        for (int j = nv + m; j < cols; ++j) d1(j) = 1.0;
        if (!run(d1, cols)) return out;
        double phase1 = -T(m, cols);
        if (phase1 > 1e-7 * std::max(1.0, b.cwiseAbs().maxCoeff())) return out;
        for (int i = 0; i < m; ++i) {
            if (basis[i] < nv + m) continue;
            int pc = -1;
            for (int j = 0; j < nv + m; ++j)
                if (std::abs(T(i, j)) > tol) {
                    pc = j;
                    break;
                }
            if (pc >= 0) pivot(i, pc);
            else dead[i] = 1; // redundant row
        }
    }

    Eigen::VectorXd d2 = Eigen::VectorXd::Zero(nv + m);
    d2.head(nv) = c;
    if (!run(d2, nv + m)) return out;

    out.feasible = true;
    out.x = Eigen::VectorXd::Zero(nv);
    for (int i = 0; i < m; ++i)
        if (!dead[i] && basis[i] < nv) out.x(basis[i]) = std::max(0.0, T(i, cols));
    return out;
}

// Exact-fit regime: once the attainable residual is at the floor, the fit
// U diag(gamma) U^T is itself the estimate and every quantity is linear in
// gamma. The sign pattern a CGL must carry (nonpositive off-diagonals, zero
// row sums) turns the weighted-l1 objective into a linear functional, so the
// tightest constraint form is a small LP. The block scheme cannot break ties
// along flat directions of the exact-fit polytope, which is exactly what the
// selection needs here; the LP resolves the optimal vertex directly. Zero row
// sums force gamma_k = 0 wherever the basis column is not orthogonal to ones;
// when that degenerates (noisy templates), the caller keeps the bisection
// path.
std::optional<CglSolution> exact_fit_lp(const OstWork& wk, const Eigen::MatrixXd& U, const SolverConfig& cfg,
                                        double eps, int passes) {
    const int n = wk.n;
    const auto& pairs = wk.pairs;
    const int E = static_cast<int>(pairs.size());

    Eigen::VectorXd s = U.transpose() * Eigen::VectorXd::Ones(n);
    std::vector<char> pin(n, 0);
    for (int k = 0; k < n; ++k) pin[k] = std::abs(s(k)) > 1e-6 ? 1 : 0;
    if (pin[n - 1]) return std::nullopt; // last mode is fixed to one instead
    std::vector<int> act;
    std::vector<int> where(n, -1);
    for (int k = 0; k + 1 < n; ++k)
        if (!pin[k]) {
            where[k] = static_cast<int>(act.size());
            act.push_back(k);
        }
    const int nv = static_cast<int>(act.size());
    if (nv == 0) return std::nullopt;

    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    rows.reserve(pairs.size() + n);
    for (int e = 0; e < E; ++e) {
        auto [i, j] = pairs[e];
        Eigen::VectorXd r(nv);
        for (int v = 0; v < nv; ++v) r(v) = U(i, act[v]) * U(j, act[v]);
        rows.push_back(std::move(r));
        rhs.push_back(-U(i, n - 1) * U(j, n - 1));
    }
    if (cfg.ordering == Ordering::LagEta) {
        for (int i = 0; i + cfg.eta < n; ++i) {
            int j = i + cfg.eta;
            if (where[i] < 0) continue; // 0 <= gamma_j is implied
            Eigen::VectorXd r = Eigen::VectorXd::Zero(nv);
            double bb = 0.0;
            if (where[j] < 0) { // gamma_j fixed: 1 at the pin, 0 elsewhere
                r(where[i]) = 1.0;
                bb = j == n - 1 ? 1.0 : 0.0;
            } else {
                r(where[i]) = 1.0;
                r(where[j]) = -1.0;
            }
            rows.push_back(std::move(r));
            rhs.push_back(bb);
        }
    }
    const int m = static_cast<int>(rows.size());
    Eigen::MatrixXd A(m, nv);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        A.row(i) = rows[i].transpose();
        b(i) = rhs[i];
    }

    Eigen::VectorXd w = Eigen::VectorXd::Ones(E);
    CglSolution sol;
    int total_pivots = 0;
    int total_outer = 0;
    for (int p = 0; p < passes; ++p) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
        for (int e = 0; e < E; ++e) {
            auto [i, j] = pairs[e];
            for (int v = 0; v < nv; ++v) c(v) -= w(e) * U(i, act[v]) * U(j, act[v]);
        }
        LpOutcome lp = lp_min_ub(A, b, c);
        if (!lp.feasible || !lp.bounded) return std::nullopt;
        total_pivots += lp.pivots;
        ++total_outer;

        Eigen::VectorXd gamma = Eigen::VectorXd::Zero(n);
        gamma(n - 1) = 1.0;
        for (int v = 0; v < nv; ++v) gamma(act[v]) = std::max(0.0, lp.x(v));
        Eigen::MatrixXd fit = U * gamma.asDiagonal() * U.transpose();
        Eigen::VectorXd a = edge_weights_of(fit, pairs);

        sol = CglSolution{};
        sol.L_star = assemble_from_weights(n, pairs, a);
        sol.gamma_star = gamma;
        auto& dg = sol.diagnostics;
        dg.residual = distance_value(sol.L_star, fit, cfg.distance);
        dg.objective = w.dot(a);
        dg.objective_history.push_back(dg.objective);
        dg.kkt_residual = 0.0;
        dg.converged = true;
        if (p + 1 < passes)
            for (int e = 0; e < E; ++e) w(e) = 1.0 / (a(e) + cfg.reweight_eps);
    }
    if (!(sol.diagnostics.residual <= eps)) return std::nullopt;
    sol.diagnostics.iterations = total_pivots;
    sol.diagnostics.outer_iterations = total_outer;
    return sol;
}

CglSolution ost_constraint_driver(const OstWork& wk, const Eigen::MatrixXd& U, const SolverConfig& cfg) {
    // Feasibility is weight-independent; probe the attainable residual once.
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(wk.P.cols());
    double r_min = floor_solve(wk, U, cfg, ones).diagnostics.residual;

    // Below this the beta bisection degenerates (every beta > floor looks
    // infeasible) and no sparsity selection happens; epsilon = 0 means "as
    // tight as the solver resolves", not an exact-arithmetic constraint.
    constexpr double kEpsFloor = 1e-6;

    double eps = -1.0;
    if (cfg.eps_mode == EpsMode::Fixed) {
        if (cfg.epsilon < 0.0) fail(errc::invalid_params, "epsilon must be >= 0");
        double slack = 1e-6 * std::max(1.0, r_min);
        if (r_min > cfg.epsilon + slack && r_min > kEpsFloor)
            fail(errc::infeasible, "constraint form infeasible at epsilon = " + std::to_string(cfg.epsilon));
        eps = std::max(cfg.epsilon, r_min);
    } else if (cfg.eps_mode == EpsMode::GridPaper) {
        for (double g : paper_eps_grid())
            if (r_min <= g) {
                eps = g;
                break;
            }
        if (eps < 0.0) fail(errc::no_feasible_epsilon, "paper grid exhausted (attainable residual " + std::to_string(r_min) + ")");
    } else { // Binary
        if (r_min > 1.0) fail(errc::no_feasible_epsilon, "binary search on [0,1] infeasible (attainable residual " + std::to_string(r_min) + ")");
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < std::max(1, cfg.binary_iters); ++it) {
            double mid = 0.5 * (lo + hi);
            if (r_min <= mid) hi = mid;
            else lo = mid;
        }
        eps = hi;
    }
    eps = std::max(eps, kEpsFloor);

    int passes = std::max(1, cfg.reweight_iters);

    // At the floor the bisection has no room and its vertex choice along the
    // exact-fit polytope is arbitrary; hand the selection to the LP instead.
    if (r_min <= kEpsFloor && eps <= kEpsFloor) {
        if (auto lp = exact_fit_lp(wk, U, cfg, eps, passes)) {
            lp->diagnostics.epsilon_used = eps;
            return *lp;
        }
    }

    // Reweighted constraint solves at the chosen epsilon.
    Eigen::VectorXd w = ones;
    CglSolution sol;
    int total_iters = 0;
    for (int p = 0; p < passes; ++p) {
        ConstraintSolve cs = constrained_pass(wk, U, cfg, eps, w);
        if (!cs.feasible) { // reweighting cannot change feasibility; guard regardless
            if (p == 0) fail(errc::infeasible, "constraint form infeasible at selected epsilon");
            break;
        }
        total_iters += cs.solution.diagnostics.iterations;
        sol = std::move(cs.solution);
        if (p + 1 < passes) {
            Eigen::VectorXd a = edge_weights_of(sol.L_star, wk.pairs);
            for (Eigen::Index e = 0; e < a.size(); ++e) w(e) = 1.0 / (a(e) + cfg.reweight_eps);
        }
    }
    // Debias: refit on the recovered support with no l1 pressure there and a
    // prohibitive weight elsewhere. The beta path shrinks weights and can park
    // on a near-flat direction of the fit; the support is reliable, so a deep
    // fit-only solve on it resolves the weights.
    Eigen::VectorXd a_fin = edge_weights_of(sol.L_star, wk.pairs);
    double a_max = a_fin.maxCoeff();
    if (a_max > 0.0) {
        Eigen::VectorXd w_polish(a_fin.size());
        for (Eigen::Index e = 0; e < a_fin.size(); ++e)
            w_polish(e) = a_fin(e) > 1e-6 * a_max ? 0.0 : 1e9 * a_max;
        SolverConfig deep = cfg;
        deep.opt_tol = std::min(cfg.opt_tol, 1e-13);
        Eigen::VectorXd warm_g = sol.gamma_star ? *sol.gamma_star : Eigen::VectorXd();
        CglSolution pol = ost_regularized(wk, U, deep, 1.0, w_polish, &a_fin, &warm_g);
        total_iters += pol.diagnostics.iterations;
        if (pol.diagnostics.residual <= eps) {
            pol.diagnostics.monotone = sol.diagnostics.monotone && pol.diagnostics.monotone;
            sol = std::move(pol);
        }
    }

    sol.diagnostics.iterations = total_iters;
    sol.diagnostics.epsilon_used = eps;
    return sol;
}

} // namespace

CglSolution nearest_cgl(const Eigen::MatrixXd& L_hat, const SolverConfig& cfg) {
    if (L_hat.rows() != L_hat.cols()) fail(errc::not_square, "input must be square");
    if (!L_hat.allFinite()) fail(errc::non_finite, "input has non-finite entries");
    if (L_hat.rows() < 2) fail(errc::invalid_params, "need N >= 2");
    if (!(cfg.opt_tol > 0.0)) fail(errc::invalid_params, "opt_tol must be > 0");
    const int n = static_cast<int>(L_hat.rows());
    Eigen::MatrixXd sym = (L_hat + L_hat.transpose()) * 0.5;
    auto pairs = all_pairs(n);
    Eigen::SparseMatrix<double> P = structure_matrix(n, pairs);
    Eigen::VectorXd b_hat = lift_symmetric(sym);

    auto pass = [&](const Eigen::VectorXd& w) {
        NnlsResult r = cfg.distance == Distance::FrobeniusSq
                           ? nonneg_l1_least_squares(P, b_hat, cfg.beta, cfg.opt_tol, cfg.max_iters, &w)
                           : maxnorm_l1_fit(n, pairs, sym, cfg.beta, cfg.opt_tol, cfg.max_iters, &w);
        CglSolution s;
        s.L_star = assemble_from_weights(n, pairs, r.a);
        s.diagnostics.iterations = r.iterations;
        s.diagnostics.kkt_residual = r.kkt_residual;
        s.diagnostics.objective = r.objective;
        s.diagnostics.converged = r.converged;
        s.diagnostics.residual = distance_value(s.L_star, sym, cfg.distance);
        return s;
    };
    return reweighted_l1(pass, pairs.size(), cfg.reweight_iters, cfg.reweight_eps);
}

CglSolution ordered_spec_temp_templates(const Eigen::MatrixXd& U, const SolverConfig& cfg) {
    check_templates(U, cfg);
    OstWork wk;
    wk.n = static_cast<int>(U.rows());
    wk.pairs = all_pairs(wk.n);
    wk.P = structure_matrix(wk.n, wk.pairs);

    if (cfg.eps_mode != EpsMode::Off) return ost_constraint_driver(wk, U, cfg);

    auto pass = [&](const Eigen::VectorXd& w) { return ost_regularized(wk, U, cfg, cfg.beta, w); };
    return reweighted_l1(pass, wk.pairs.size(), cfg.reweight_iters, cfg.reweight_eps);
}

CglSolution ordered_spec_temp(const SampleCovariance& cov, const SolverConfig& cfg) {
    return ordered_spec_temp_templates(cov.eigvecs, cfg);
}

EpsSearchResult epsilon_feasibility_search(const Eigen::MatrixXd& U, const SolverConfig& cfg) {
    check_templates(U, cfg);
    if (cfg.eps_mode == EpsMode::Off || cfg.eps_mode == EpsMode::Fixed)
        fail(errc::invalid_params, "feasibility search needs a GridPaper or Binary schedule");
    OstWork wk;
    wk.n = static_cast<int>(U.rows());
    wk.pairs = all_pairs(wk.n);
    wk.P = structure_matrix(wk.n, wk.pairs);
    CglSolution sol = ost_constraint_driver(wk, U, cfg);
    EpsSearchResult out;
    out.epsilon = sol.diagnostics.epsilon_used;
    out.solution = std::move(sol);
    return out;
}

CglSolution reweighted_l1(const std::function<CglSolution(const Eigen::VectorXd& weights)>& solve_pass,
                          std::size_t n_edge_vars, int iters, double reweight_eps) {
    if (reweight_eps <= 0.0) fail(errc::invalid_params, "reweight_eps must be > 0");
    const int passes = std::max(1, iters);
    Eigen::VectorXd w = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n_edge_vars));
    CglSolution sol;
    int total_iters = 0;
    for (int p = 0; p < passes; ++p) {
        sol = solve_pass(w);
        total_iters += sol.diagnostics.iterations;
        if (p + 1 < passes) {
            const int n = static_cast<int>(sol.L_star.rows());
            auto pairs = all_pairs(n);
            Eigen::VectorXd a = edge_weights_of(sol.L_star, pairs);
            if (static_cast<std::size_t>(a.size()) != n_edge_vars)
                fail(errc::dimension_mismatch, "reweighted pass returned unexpected edge count");
            for (Eigen::Index e = 0; e < a.size(); ++e) w(e) = 1.0 / (a(e) + reweight_eps);
        }
    }
    sol.diagnostics.iterations = total_iters;
    return sol;
}

TimeEstimate estimate_observation_time(const Eigen::MatrixXd& L_ord, const SampleCovariance& cov, int t_max) {
    if (t_max < 1) fail(errc::invalid_params, "t_max must be >= 1");
    if (L_ord.rows() != cov.matrix.rows()) fail(errc::dimension_mismatch, "L_ord does not match covariance size");
    TimeEstimate est;
    est.errors.assign(t_max, std::numeric_limits<double>::quiet_NaN());
    const double tr_ord = L_ord.trace();
    double best = kInf;
    for (int t = 1; t <= t_max; ++t) {
        SpectralEstimate se = simplified_inverse_filter(cov, t);
        double tr_t = se.L_hat.trace();
        if (tr_t <= 1e-12) continue;
        est.candidates.push_back(t);
        double err = (L_ord - se.L_hat * (tr_ord / tr_t)).norm();
        est.errors[t - 1] = err;
        if (err < best) { // strict: ties keep the smaller t
            best = err;
            est.t_hat = t;
        }
    }
    if (est.t_hat == 0) fail(errc::all_candidates_degenerate, "every candidate t had near-zero trace");
    return est;
}

CglSolution hybrid(const SampleCovariance& cov, const SolverConfig& cfg) {
    CglSolution ord = ordered_spec_temp(cov, cfg);
    TimeEstimate te = estimate_observation_time(ord.L_star, cov, cfg.t_max);
    SpectralEstimate se = simplified_inverse_filter(cov, te.t_hat);
    CglSolution sol = nearest_cgl(se.L_hat, cfg);
    sol.diagnostics.t_hat = te.t_hat;
    sol.diagnostics.epsilon_used = ord.diagnostics.epsilon_used;
    return sol;
}

CglSolution struct_glasso_baseline(const Eigen::MatrixXd& L_hat, const SolverConfig& cfg) {
    SymEig eig = eigendecompose_sym(L_hat);
    const int n = static_cast<int>(L_hat.rows());
    const double amax = eig.values.cwiseAbs().maxCoeff();
    int near_zero = 0;
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        if (std::abs(eig.values(i)) <= 1e-9 * std::max(amax, 1e-300)) ++near_zero;
    if (near_zero >= 2)
        fail(errc::singular_input, "pseudo-determinant undefined: input rank deficient beyond the consensus mode");

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n); // pseudo-inverse of L_hat
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        if (std::abs(eig.values(i)) > 1e-9 * std::max(amax, 1e-300))
            Q += eig.vectors.col(i) * eig.vectors.col(i).transpose() / eig.values(i);

    auto pairs = all_pairs(n);
    const auto E = static_cast<Eigen::Index>(pairs.size());
    Eigen::VectorXd q(E);
    for (Eigen::Index e = 0; e < E; ++e) {
        auto [i, j] = pairs[e];
        q(e) = Q(i, i) + Q(j, j) - 2.0 * Q(i, j);
    }
    Eigen::VectorXd pen = Eigen::VectorXd::Constant(E, 4.0 * cfg.beta);

    struct Eval {
        double f = kInf;
        Eigen::VectorXd grad;
        bool ok = false;
    };
    auto evaluate = [&](const Eigen::VectorXd& a, bool with_grad) {
        Eval ev;
        Eigen::MatrixXd L = assemble_from_weights(n, pairs, a);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
        if (es.info() != Eigen::Success) return ev;
        const auto& lam = es.eigenvalues(); // ascending; lam(0) ~ 0 along 1
        double lmax = std::max(lam(n - 1), 1e-300);
        if (lam(1) <= 1e-10 * lmax) return ev; // rank < n-1: log pdet -> -inf
        double logpdet = 0.0;
        for (int i = 1; i < n; ++i) logpdet += std::log(lam(i));
        ev.f = q.dot(a) - logpdet;
        ev.ok = true;
        if (with_grad) {
            Eigen::MatrixXd Minv = Eigen::MatrixXd::Zero(n, n);
            for (int i = 1; i < n; ++i)
                Minv += es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose() / lam(i);
            ev.grad.resize(E);
            for (Eigen::Index e = 0; e < E; ++e) {
                auto [i, j] = pairs[e];
                ev.grad(e) = q(e) - (Minv(i, i) + Minv(j, j) - 2.0 * Minv(i, j));
            }
        }
        return ev;
    };

    // init: clipped input weights; thicken uniformly until the domain is entered
    Eigen::MatrixXd sym = (L_hat + L_hat.transpose()) * 0.5;
    Eigen::VectorXd a = edge_weights_of(sym, pairs);
    double bump = std::max(1e-3, sym.trace() / std::max(1, n) * 1e-2);
    for (int tries = 0; tries < 60; ++tries) {
        if (evaluate(a, false).ok) break;
        a.array() += bump;
        bump *= 2.0;
    }
    Eval cur = evaluate(a, true);
    if (!cur.ok) fail(errc::numeric_failure, "could not find a connected starting point");

    CglSolution sol;
    auto& dg = sol.diagnostics;
    const double kkt_tol = cfg.opt_tol * (1.0 + q.norm());
    double step = 1.0 / std::max(q.cwiseAbs().maxCoeff(), 1.0);
    const int cap = std::min(cfg.max_iters, 20000);
    bool converged = false;
    int it = 0;
    for (; it < cap; ++it) {
        Eigen::VectorXd full_grad = cur.grad + pen;
        double kkt = kkt_residual_nnls(a, full_grad);
        dg.kkt_residual = kkt;
        if (kkt <= kkt_tol) {
            converged = true;
            break;
        }
        // backtracking proximal gradient step
        double t = step * 2.0;
        for (int bt = 0; bt < 60; ++bt) {
            Eigen::VectorXd a_new = (a - t * cur.grad - t * pen).cwiseMax(0.0);
            Eval ev = evaluate(a_new, false);
            Eigen::VectorXd d = a_new - a;
            if (ev.ok && ev.f <= cur.f + cur.grad.dot(d) + d.squaredNorm() / (2.0 * t) + 1e-12) {
                a = a_new;
                cur = evaluate(a, true);
                step = t;
                break;
            }
            t *= 0.5;
            if (bt == 59) fail(errc::numeric_failure, "line search stalled");
        }
    }
    sol.L_star = assemble_from_weights(n, pairs, a);
    dg.iterations = it;
    dg.converged = converged;
    dg.objective = cur.f + pen.dot(a);
    dg.residual = distance_value(sol.L_star, sym, Distance::FrobeniusSq);
    return sol;
}

std::vector<double> struct_glasso_beta_grid(const Eigen::MatrixXd& L_hat, Eigen::Index M) {
    if (M < 1) fail(errc::invalid_params, "M must be >= 1");
    SymEig eig = eigendecompose_sym(L_hat);
    const int n = static_cast<int>(L_hat.rows());
    const double amax = eig.values.cwiseAbs().maxCoeff();
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < eig.values.size(); ++i)
        if (std::abs(eig.values(i)) > 1e-9 * std::max(amax, 1e-300))
            Q += eig.vectors.col(i) * eig.vectors.col(i).transpose() / eig.values(i);
    double s_max = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) s_max = std::max(s_max, std::abs(Q(i, j)));
    std::vector<double> grid = {0.0};
    double base = s_max * std::sqrt(std::log(static_cast<double>(n)) / static_cast<double>(M));
    for (int r = 1; r <= 14; ++r) grid.push_back(std::pow(0.75, r) * base);
    return grid;
}

} // namespace cglearn
