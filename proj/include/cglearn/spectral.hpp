#pragma once

#include "cglearn/dynamics.hpp"

#include <Eigen/Dense>

namespace cglearn {

struct SymEig {
    Eigen::VectorXd values;  // nonincreasing
    Eigen::MatrixXd vectors; // columns follow values
};

// Symmetrizes the input as (m + m^T)/2 before factorizing; verifies the
// reconstruction residual stays below 1e-8 * ||m||_F.
SymEig eigendecompose_sym(const Eigen::MatrixXd& m);

// Flips estimated eigenvector columns so <v_hat_i, v_ref_i> >= 0; exact-zero
// inner products keep the + sign.
Eigen::MatrixXd align_signs(const Eigen::MatrixXd& v_hat, const Eigen::MatrixXd& v_ref);

// sigma2_hat = lambda_max(S_M); fails with DegenerateCovariance below the
// 1e-12 * trace/N floor.
double estimate_sigma2(const SampleCovariance& cov);

// Unique root of prod_t (1 - alpha_t lambda) = h_target in [0, 1/alpha_max];
// bisection to |h(lambda) - h_target| <= 1e-12 within 200 iterations.
double invert_filter_eigenvalue(const FilterSpec& filter, double h_target);

struct SpectralEstimate {
    double sigma2_hat = 0.0;
    Eigen::VectorXd lambda_hat; // nondecreasing, first entry 0
    Eigen::MatrixXd eigvecs;    // column i pairs with lambda_hat(i)
    Eigen::MatrixXd L_hat;      // eigvecs * diag(lambda_hat) * eigvecs^T
};

// Known-filter estimator: eigenvalue ratios of S_M / sigma2_hat are clipped
// into [0, 1] and pushed through the filter inverse; eigenvectors carry over.
SpectralEstimate inverse_filter(const SampleCovariance& cov, const FilterSpec& filter);

// Unknown constant-rate surrogate: L_hat = I - (S_M / sigma2_hat)^(1/(2t)),
// negative ratios clipped at 0 before the fractional power.
SpectralEstimate simplified_inverse_filter(const SampleCovariance& cov, int t);

} // namespace cglearn
