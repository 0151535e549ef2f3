#pragma once

#include "cglearn/dynamics.hpp"
#include "cglearn/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace cglearn {

enum class Distance { FrobeniusSq, MaxNorm };

// LagEta keeps gamma_i <= gamma_{i+eta} plus gamma_N = 1; LeadingOnly drops the
// ordering and keeps only gamma_N = 1.
enum class Ordering { LagEta, LeadingOnly };

// Off: regularized form with cfg.beta. Fixed: constraint form at cfg.epsilon.
// GridPaper / Binary: feasibility search over the corresponding schedule.
enum class EpsMode { Off, Fixed, GridPaper, Binary };

struct SolverConfig {
    double beta = 0.01;
    double epsilon = 0.0;
    EpsMode eps_mode = EpsMode::Off;
    int binary_iters = 5;
    int eta = 1;
    Distance distance = Distance::FrobeniusSq;
    Ordering ordering = Ordering::LagEta;
    int reweight_iters = 0; // total solve passes; 0 and 1 both mean one unweighted pass
    double reweight_eps = 1e-4;
    double opt_tol = 1e-8;
    int max_iters = 50000;
    int t_max = 10;
};

struct SolverDiagnostics {
    int iterations = 0;       // first-order iterations, summed over passes
    int outer_iterations = 0; // block-coordinate passes
    double objective = 0.0;
    double kkt_residual = 0.0;
    double residual = 0.0; // d(L*, fit target) under cfg.distance
    bool converged = true; // false marks MaxItersExceeded on some stage
    bool monotone = true;  // block-coordinate objective never increased
    double epsilon_used = -1.0;
    int t_hat = 0;
    std::vector<double> objective_history;
};

struct CglSolution {
    Eigen::MatrixXd L_star;
    std::optional<Eigen::VectorXd> gamma_star;
    SolverDiagnostics diagnostics;
};

// Vectorization of the CGL cone over all node pairs: a >= 0 holds the
// negated off-diagonal entries, b = [diag(L); sqrt(2) * strict lower triangle]
// so that ||L(a) - L_hat||_F^2 = ||P a - b_hat||_2^2 and ||vec L(a)||_1 = 4 ||a||_1.
struct CglVectorization {
    int n = 0;
    std::vector<std::pair<int, int>> pairs; // lexicographic (i, j), i < j
    Eigen::SparseMatrix<double> P;          // (n + E) x E, 3 entries per column
    Eigen::VectorXd b_hat;
};

CglVectorization cgl_vectorize(const Eigen::MatrixXd& L_hat);
Eigen::VectorXd lift_symmetric(const Eigen::MatrixXd& m); // the b vector of a symmetric matrix
Eigen::MatrixXd assemble_from_weights(int n, const std::vector<std::pair<int, int>>& pairs, const Eigen::VectorXd& a);
double distance_value(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Distance d);

struct NnlsResult {
    Eigen::VectorXd a;
    int iterations = 0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    bool converged = false;
};

// min_{a >= 0} ||P a - b_hat||_2^2 + 4 beta sum_e w_e a_e via monotone
// accelerated projected gradient with adaptive restart. Termination: scaled
// KKT residual <= opt_tol * (1 + ||b_hat||_2); at max_iters the best iterate
// is returned with converged = false.
NnlsResult nonneg_l1_least_squares(const Eigen::SparseMatrix<double>& P, const Eigen::VectorXd& b_hat, double beta,
                                   double opt_tol = 1e-8, int max_iters = 50000,
                                   const Eigen::VectorXd* weights = nullptr,
                                   const Eigen::VectorXd* warm_start = nullptr);

// Same feasible set with the elementwise-max data term
// min_{a >= 0} max_{ij} |L(a) - L_hat|_ij + 4 beta sum_e w_e a_e,
// solved by a primal-dual (Chambolle-Pock) scheme; duality gap certifies.
NnlsResult maxnorm_l1_fit(int n, const std::vector<std::pair<int, int>>& pairs, const Eigen::MatrixXd& L_hat,
                          double beta, double opt_tol = 1e-8, int max_iters = 50000,
                          const Eigen::VectorXd* weights = nullptr);

CglSolution nearest_cgl(const Eigen::MatrixXd& L_hat, const SolverConfig& cfg);

// Ordered projection used by the gamma step: Euclidean projection onto
// { g : g_i <= g_{i+eta} } (eta independent chains, PAV each), optionally with
// the last entry pinned to 1 (its chain is then upper-clipped at 1).
Eigen::VectorXd ordered_projection(const Eigen::VectorXd& v, int eta, bool fix_last_to_one);

// Block-coordinate solver for the regularized spectral-template objective
// ||vec L - (U (.) U) gamma||_2^2 + beta ||vec L||_1 over the CGL cone with
// gamma ordered and gamma_N = 1. U columns are covariance eigenvectors in
// nonincreasing-eigenvalue order. eps_mode != Off switches to the constraint
// form (min ||vec L||_1 s.t. fit residual <= epsilon) via the feasibility
// machinery below.
CglSolution ordered_spec_temp(const SampleCovariance& cov, const SolverConfig& cfg);
CglSolution ordered_spec_temp_templates(const Eigen::MatrixXd& U, const SolverConfig& cfg);

struct EpsSearchResult {
    double epsilon = 0.0;
    CglSolution solution;
};

// Walks the schedule (paper grid {0.002:0.002:0.03} + {0.03 + 0.005 r}, or
// binary_iters bisection steps on [0, 1]) and returns the first epsilon whose
// constraint-form problem is feasible, with its solution.
EpsSearchResult epsilon_feasibility_search(const Eigen::MatrixXd& U, const SolverConfig& cfg);

// Generic reweighting driver: passes = max(1, iters) solves, first unweighted,
// then w_e = 1 / (|a_e| + reweight_eps) from the previous solution.
CglSolution reweighted_l1(const std::function<CglSolution(const Eigen::VectorXd& weights)>& solve_pass,
                          std::size_t n_edge_vars, int iters, double reweight_eps);

struct TimeEstimate {
    int t_hat = 0;
    std::vector<double> errors;  // indexed t-1; NaN for skipped candidates
    std::vector<int> candidates; // the t values actually scored
};

// argmin_t || L_ord - L_hat_t * tr(L_ord)/tr(L_hat_t) ||_F over t = 1..t_max
// with L_hat_t from the simplified inverse filter; ties resolve to smaller t;
// candidates with tr(L_hat_t) <= 1e-12 are skipped.
TimeEstimate estimate_observation_time(const Eigen::MatrixXd& L_ord, const SampleCovariance& cov, int t_max);

// ordered_spec_temp -> estimate_observation_time -> nearest_cgl on the
// simplified inverse filter at t_hat. diagnostics.t_hat records the choice.
CglSolution hybrid(const SampleCovariance& cov, const SolverConfig& cfg);

// Baseline: min tr(L pinv(L_hat)) - log pdet(L) + beta ||vec L||_1 over the
// CGL cone by projected proximal gradient with backtracking. L_hat with more
// than one (near-)zero eigenvalue raises SingularInput.
CglSolution struct_glasso_baseline(const Eigen::MatrixXd& L_hat, const SolverConfig& cfg);

// Paper's beta grid for the baseline: {0} + {0.75^r s_max sqrt(log N / M)},
// r = 1..14, s_max = max off-diagonal |pinv(L_hat)|.
std::vector<double> struct_glasso_beta_grid(const Eigen::MatrixXd& L_hat, Eigen::Index M);

} // namespace cglearn
