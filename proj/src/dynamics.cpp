#include "cglearn/dynamics.hpp"

#include "cglearn/errors.hpp"
#include "cglearn/rng.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace cglearn {

namespace {

constexpr std::uint64_t kInputSalt = 0x696e7075ULL;  // per-sample input stream
constexpr std::uint64_t kFilterSalt = 0x66696c74ULL; // per-sample filter stream
constexpr std::uint64_t kChainSalt = 0x61723163ULL;  // sequential AR(1) chain
constexpr std::uint64_t kWishartSalt = 0x77697368ULL;

void check_stability(const FilterSpec& f, double lambda_max) {
    for (double a : f.rates) {
        if (lambda_max > 0.0 && a >= 1.0 / lambda_max)
            fail(errc::unstable_rate,
                 "rate " + std::to_string(a) + " >= 1/lambda_max = " + std::to_string(1.0 / lambda_max));
    }
}

} // namespace

FilterSpec::FilterSpec(std::vector<double> r) : rates(std::move(r)) {
    for (double a : rates)
        if (!(a > 0.0) || !std::isfinite(a)) fail(errc::non_positive_rate, "rates must be finite and > 0");
}

SnapshotSet::SnapshotSet(Eigen::MatrixXd s, double sigma2_, Provenance prov)
    : signals(std::move(s)), sigma2(sigma2_), provenance(std::move(prov)) {
    if (signals.rows() < 1) fail(errc::invalid_params, "snapshot set needs M >= 1");
    if (!signals.allFinite()) fail(errc::non_finite, "snapshot signals must be finite");
    if (!(sigma2 >= 0.0)) fail(errc::invalid_sigma, "sigma2 must be >= 0");
}

SampleCovariance SampleCovariance::from_matrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) fail(errc::not_square, "covariance must be square");
    if (!m.allFinite()) fail(errc::non_finite, "covariance has non-finite entries");
    SampleCovariance c;
    c.matrix = (m + m.transpose()) * 0.5;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.matrix);
    if (es.info() != Eigen::Success) fail(errc::numeric_failure, "covariance eigendecomposition failed");
    const auto n = m.rows();
    c.eigvals.resize(n);
    c.eigvecs.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) { // ascending -> nonincreasing, ties keep original relative order
        c.eigvals(i) = es.eigenvalues()(n - 1 - i);
        c.eigvecs.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return c;
}

double filter_response(const std::vector<double>& rates, double lambda) {
    double h = 1.0;
    for (double a : rates) h *= 1.0 - a * lambda;
    return h;
}

Eigen::VectorXd apply_filter(const Laplacian& L, const FilterSpec& filter, const Eigen::VectorXd& x) {
    if (x.size() != L.n()) fail(errc::dimension_mismatch, "state length does not match Laplacian size");
    check_stability(filter, L.lambda_max());
    Eigen::VectorXd y = x;
    for (double a : filter.rates) y -= a * (L.matrix() * y).eval();
    return y;
}

Eigen::MatrixXd wishart_covariance(int n, int d, std::uint64_t seed) {
    if (n <= 0 || d < n) fail(errc::invalid_params, "wishart needs n >= 1, d >= N");
    Stream s(mix_seed(seed, kWishartSalt));
    Eigen::MatrixXd G(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = s.normal();
    return G * G.transpose() / static_cast<double>(d);
}

Eigen::MatrixXd simulate_inputs(int n, Eigen::Index M, double sigma, std::uint64_t seed, const InputModel& input) {
    if (M < 1) fail(errc::invalid_params, "need M >= 1");
    if (!(sigma > 0.0)) fail(errc::invalid_sigma, "sigma must be > 0");
    Eigen::MatrixXd X(M, n);
    switch (input.kind) {
    case InputModel::Kind::Gaussian:
        for (Eigen::Index k = 0; k < M; ++k) {
            Stream s(mix_seed(seed, kInputSalt, static_cast<std::uint64_t>(k)));
            for (int i = 0; i < n; ++i) X(k, i) = sigma * s.normal();
        }
        break;
    case InputModel::Kind::Uniform: {
        const double half = std::sqrt(3.0) * sigma; // variance sigma^2
        for (Eigen::Index k = 0; k < M; ++k) {
            Stream s(mix_seed(seed, kInputSalt, static_cast<std::uint64_t>(k)));
            for (int i = 0; i < n; ++i) X(k, i) = s.uniform(-half, half);
        }
        break;
    }
    case InputModel::Kind::Ar1: {
        const double a = input.ar_coeff;
        if (a < 0.0 || a >= 1.0) fail(errc::invalid_params, "ar1 needs coefficient in [0,1)");
        if (input.stride < 1) fail(errc::invalid_params, "ar1 stride must be >= 1");
        Stream s(mix_seed(seed, kChainSalt)); // inherently sequential
        Eigen::VectorXd z(n);
        for (int i = 0; i < n; ++i) z(i) = sigma * s.normal();
        X.row(0) = z.transpose();
        for (Eigen::Index k = 1; k < M; ++k) {
            for (int step = 0; step < input.stride; ++step)
                for (int i = 0; i < n; ++i) z(i) = a * z(i) + (1.0 - a) * sigma * s.normal();
            X.row(k) = z.transpose();
        }
        break;
    }
    case InputModel::Kind::Wishart: {
        if (input.wishart_d < n) fail(errc::invalid_params, "wishart needs d >= N");
        Stream s(mix_seed(seed, kWishartSalt));
        Eigen::MatrixXd G(n, input.wishart_d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < input.wishart_d; ++j) G(i, j) = s.normal();
        const double scale = sigma / std::sqrt(static_cast<double>(input.wishart_d));
        Eigen::VectorXd z(input.wishart_d);
        for (Eigen::Index k = 0; k < M; ++k) {
            Stream sk(mix_seed(seed, kInputSalt, static_cast<std::uint64_t>(k)));
            for (int j = 0; j < input.wishart_d; ++j) z(j) = sk.normal();
            X.row(k) = (scale * (G * z)).transpose();
        }
        break;
    }
    }
    return X;
}

SnapshotSet simulate_snapshots(const Laplacian& L, const FilterModel& filters, Eigen::Index M, double sigma,
                               std::uint64_t seed, const InputModel& input) {
    const int n = L.n();
    Eigen::MatrixXd X = simulate_inputs(n, M, sigma, seed, input);

    Provenance prov;
    prov.seed = seed;
    switch (input.kind) {
    case InputModel::Kind::Gaussian: prov.input_kind = "gaussian"; break;
    case InputModel::Kind::Uniform: prov.input_kind = "uniform"; break;
    case InputModel::Kind::Ar1:
        prov.input_kind = "ar1";
        prov.ar_coeff = input.ar_coeff;
        prov.stride = input.stride;
        break;
    case InputModel::Kind::Wishart:
        prov.input_kind = "wishart";
        prov.wishart_d = input.wishart_d;
        break;
    }

    Eigen::MatrixXd Y(M, n);
    if (const auto* fixed = std::get_if<FilterSpec>(&filters)) {
        check_stability(*fixed, L.lambda_max());
        prov.filter_kind = "fixed";
        prov.rates = fixed->rates;
        for (Eigen::Index k = 0; k < M; ++k) {
            Eigen::VectorXd y = X.row(k).transpose();
            for (double a : fixed->rates) y -= a * (L.matrix() * y).eval();
            Y.row(k) = y.transpose();
        }
    } else {
        const auto& model = std::get<RandomFilterModel>(filters);
        if (model.t_set.empty()) fail(errc::empty_filter, "random filter model needs a nonempty t_set");
        for (int t : model.t_set)
            if (t < 1) fail(errc::invalid_params, "random filter lengths must be >= 1");
        const double lam_max = L.lambda_max();
        if (!(lam_max > 0.0)) fail(errc::invalid_params, "random filters need lambda_max > 0");
        prov.filter_kind = "random";
        prov.t_set = model.t_set;
        for (Eigen::Index k = 0; k < M; ++k) {
            Stream fs(mix_seed(seed, kFilterSalt, static_cast<std::uint64_t>(k)));
            int T = model.t_set[fs.integer(model.t_set.size())];
            Eigen::VectorXd y = X.row(k).transpose();
            for (int t = 0; t < T; ++t) {
                double a = fs.uniform01() / lam_max; // in (0, 1/lambda_max)
                y -= a * (L.matrix() * y).eval();
            }
            Y.row(k) = y.transpose();
        }
    }
    return SnapshotSet(std::move(Y), sigma * sigma, std::move(prov));
}

SampleCovariance sample_covariance(const SnapshotSet& snapshots) {
    return sample_covariance(snapshots.signals);
}

SampleCovariance sample_covariance(const Eigen::MatrixXd& signals) {
    if (signals.rows() < 1) fail(errc::invalid_params, "need at least one snapshot row");
    if (!signals.allFinite()) fail(errc::non_finite, "signals must be finite");
    Eigen::MatrixXd S = signals.transpose() * signals / static_cast<double>(signals.rows());
    return SampleCovariance::from_matrix(S);
}

Eigen::MatrixXd analytic_covariance(const Laplacian& L, const FilterSpec& filter, double sigma) {
    if (!(sigma > 0.0)) fail(errc::invalid_sigma, "sigma must be > 0");
    check_stability(filter, L.lambda_max());
    const auto& V = L.eigenvectors();
    const auto& lam = L.eigenvalues();
    Eigen::VectorXd h2(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        double h = filter_response(filter.rates, lam(i));
        h2(i) = sigma * sigma * h * h;
    }
    return V * h2.asDiagonal() * V.transpose();
}

} // namespace cglearn
