#include "cglearn/spectral.hpp"

#include "cglearn/errors.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace cglearn {

SymEig eigendecompose_sym(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) fail(errc::not_square, "matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (!m.allFinite()) fail(errc::non_finite, "matrix has non-finite entries");
    Eigen::MatrixXd sym = (m + m.transpose()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) fail(errc::numeric_failure, "eigendecomposition did not converge");
    const auto n = m.rows();
    SymEig out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) { // ascending -> nonincreasing; ties keep solver order
        out.values(i) = es.eigenvalues()(n - 1 - i);
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    double scale = sym.norm();
    double resid = (sym - out.vectors * out.values.asDiagonal() * out.vectors.transpose()).norm();
    if (resid > 1e-8 * std::max(scale, 1e-300))
        fail(errc::numeric_failure, "eigendecomposition residual " + std::to_string(resid) + " too large");
    return out;
}

Eigen::MatrixXd align_signs(const Eigen::MatrixXd& v_hat, const Eigen::MatrixXd& v_ref) {
    if (v_hat.rows() != v_ref.rows() || v_hat.cols() != v_ref.cols())
        fail(errc::dimension_mismatch, "eigenvector blocks differ in shape");
    Eigen::MatrixXd out = v_hat;
    for (Eigen::Index c = 0; c < v_hat.cols(); ++c) {
        double ip = v_hat.col(c).dot(v_ref.col(c));
        if (ip < 0.0) out.col(c) = -v_hat.col(c);
    }
    return out;
}

double estimate_sigma2(const SampleCovariance& cov) {
    if (cov.eigvals.size() == 0) fail(errc::invalid_params, "empty covariance");
    double s2 = cov.eigvals(0);
    double floor = 1e-12 * cov.matrix.trace() / static_cast<double>(cov.matrix.rows());
    if (!(s2 > floor)) fail(errc::degenerate_covariance, "largest covariance eigenvalue below noise floor");
    return s2;
}

double invert_filter_eigenvalue(const FilterSpec& filter, double h_target) {
    if (filter.rates.empty()) fail(errc::empty_filter, "cannot invert an empty filter");
    for (double a : filter.rates)
        if (!(a > 0.0)) fail(errc::non_positive_rate, "filter rates must be > 0");
    h_target = std::clamp(h_target, 0.0, 1.0); // [0,1] is the filter's range; project noisy inputs

    const double hi_end = 1.0 / *std::max_element(filter.rates.begin(), filter.rates.end());
    if (h_target >= 1.0) return 0.0;
    if (h_target <= 0.0) return hi_end;

    // h is strictly decreasing on [0, 1/alpha_max] with h(0)=1, h(end)=0
    double lo = 0.0, hi = hi_end, mid = 0.5 * hi_end;
    for (int it = 0; it < 200; ++it) {
        mid = 0.5 * (lo + hi);
        double h = filter_response(filter.rates, mid);
        if (std::abs(h - h_target) <= 1e-12) return mid;
        if (h > h_target) lo = mid;
        else hi = mid;
    }
    return mid;
}

namespace {

SpectralEstimate assemble(const SampleCovariance& cov, double s2, Eigen::VectorXd lambda) {
    SpectralEstimate est;
    est.sigma2_hat = s2;
    est.lambda_hat = std::move(lambda);
    est.eigvecs = cov.eigvecs;
    est.L_hat = est.eigvecs * est.lambda_hat.asDiagonal() * est.eigvecs.transpose();
    return est;
}

} // namespace

SpectralEstimate inverse_filter(const SampleCovariance& cov, const FilterSpec& filter) {
    double s2 = estimate_sigma2(cov);
    const auto n = cov.eigvals.size();
    Eigen::VectorXd lambda(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double ratio = std::clamp(cov.eigvals(i) / s2, 0.0, 1.0);
        lambda(i) = invert_filter_eigenvalue(filter, std::sqrt(ratio));
    }
    return assemble(cov, s2, std::move(lambda));
}

SpectralEstimate simplified_inverse_filter(const SampleCovariance& cov, int t) {
    if (t < 1) fail(errc::invalid_params, "observation time t must be >= 1");
    double s2 = estimate_sigma2(cov);
    const auto n = cov.eigvals.size();
    Eigen::VectorXd lambda(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double ratio = std::max(cov.eigvals(i) / s2, 0.0);
        lambda(i) = 1.0 - std::pow(ratio, 1.0 / (2.0 * t));
    }
    return assemble(cov, s2, std::move(lambda));
}

} // namespace cglearn
