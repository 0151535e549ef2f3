#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cglearn/dynamics.hpp"
#include "cglearn/errors.hpp"
#include "cglearn/graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

using namespace cglearn;

namespace {

Laplacian two_node(double w = 1.0) {
    return laplacian_of(WeightedGraph(2, {{0, 1, w}}));
}

Laplacian connected(int n, double p, std::uint64_t seed, double wlo = 0.5, double whi = 2.0) {
    return laplacian_of(generate_connected(ErParams{n, p}, WeightDist::uniform(wlo, whi), seed));
}

double spec_norm(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((m + m.transpose()) * 0.5);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return errc::numeric_failure;
}

} // namespace

TEST_CASE("FilterSpec rejects nonpositive rates") {
    CHECK_NOTHROW(FilterSpec({0.1, 0.2}));
    CHECK(code_of([] { FilterSpec({0.1, 0.0}); }) == errc::non_positive_rate);
    CHECK(code_of([] { FilterSpec({-0.1}); }) == errc::non_positive_rate);
    CHECK(FilterSpec(std::vector<double>{}).length() == 0); // identity filter allowed
}

TEST_CASE("apply_filter basic behaviour") {
    Laplacian L = two_node();
    Eigen::VectorXd x(2);
    x << 3.0, -1.0;

    // empty filter is the identity
    CHECK((apply_filter(L, FilterSpec(std::vector<double>{}), x) - x).cwiseAbs().maxCoeff() == 0.0);

    // the all-ones vector is a fixed point of every stable filter
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    CHECK((apply_filter(L, FilterSpec({0.3, 0.1}), ones) - ones).cwiseAbs().maxCoeff() < 1e-14);

    // oracle: dense (I - 0.25 L) x against the mat-vec path
    Eigen::VectorXd e(2);
    e << 1.0, 0.0;
    Eigen::MatrixXd dense = Eigen::MatrixXd::Identity(2, 2) - 0.25 * L.matrix();
    Eigen::VectorXd want = dense * e;
    CHECK(want(0) == doctest::Approx(0.75));
    CHECK(want(1) == doctest::Approx(0.25));
    CHECK((apply_filter(L, FilterSpec({0.25}), e) - want).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("apply_filter error paths") {
    Laplacian L = two_node(); // lambda_max = 2
    Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
    CHECK(code_of([&] { apply_filter(L, FilterSpec({0.51}), x); }) == errc::unstable_rate);  // above 1/lambda_max
    CHECK(code_of([&] { apply_filter(L, FilterSpec({0.49}), x); }) == errc::numeric_failure); // sentinel: no throw
    Eigen::VectorXd bad = Eigen::VectorXd::Ones(3);
    CHECK(code_of([&] { apply_filter(L, FilterSpec({0.1}), bad); }) == errc::dimension_mismatch);
}

TEST_CASE("long constant-rate filters reach consensus") {
    Laplacian L = connected(5, 0.6, 21);
    Eigen::VectorXd x(5);
    x << 2.0, -1.0, 0.5, 4.0, -3.0;
    double c = x.mean();
    std::vector<double> rates(500, 0.9 / L.lambda_max());
    Eigen::VectorXd y = apply_filter(L, FilterSpec(rates), x);
    CHECK((y - Eigen::VectorXd::Constant(5, c)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("simulate_snapshots determinism and single-draw semantics") {
    Laplacian L = connected(6, 0.5, 4);
    FilterSpec f({0.2 / L.lambda_max(), 0.4 / L.lambda_max()});

    SnapshotSet a = simulate_snapshots(L, f, 7, 1.0, 99);
    SnapshotSet b = simulate_snapshots(L, f, 7, 1.0, 99);
    CHECK((a.signals - b.signals).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.sigma2 == 1.0);
    CHECK(a.provenance.filter_kind == "fixed");
    CHECK(a.provenance.rates == f.rates);

    // per-sample streams: a longer run extends the shorter one row-for-row
    SnapshotSet longer = simulate_snapshots(L, f, 15, 1.0, 99);
    CHECK((longer.signals.topRows(7) - a.signals).cwiseAbs().maxCoeff() == 0.0);

    // M=1 is one filtered input row
    SnapshotSet one = simulate_snapshots(L, f, 1, 1.0, 99);
    Eigen::MatrixXd xi = simulate_inputs(6, 1, 1.0, 99, InputModel::gaussian());
    Eigen::VectorXd want = apply_filter(L, f, xi.row(0).transpose());
    CHECK((one.signals.row(0).transpose() - want).cwiseAbs().maxCoeff() < 1e-14);

    CHECK(code_of([&] { simulate_snapshots(L, f, 0, 1.0, 99); }) == errc::invalid_params);
    CHECK(code_of([&] { simulate_snapshots(L, f, 5, 0.0, 99); }) == errc::invalid_sigma);
    CHECK(code_of([&] { simulate_snapshots(L, FilterSpec({1.0}), 5, 1.0, 99); }) == errc::unstable_rate);
}

TEST_CASE("identity filter snapshots have near-identity covariance") {
    Laplacian L = connected(5, 0.7, 8);
    SnapshotSet s = simulate_snapshots(L, FilterSpec(std::vector<double>{}), 5000, 1.0, 17);
    SampleCovariance cov = sample_covariance(s);
    CHECK((cov.matrix - Eigen::MatrixXd::Identity(5, 5)).norm() < 0.2);
}

TEST_CASE("sample_covariance hand cases") {
    Eigen::MatrixXd one(1, 3);
    one << 1.0, 2.0, -1.0;
    Eigen::MatrixXd C1 = sample_covariance(one).matrix;
    CHECK((C1 - one.row(0).transpose() * one.row(0)).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::MatrixXd basis(2, 2);
    basis << 1, 0, 0, 1;
    CHECK((sample_covariance(basis).matrix - 0.5 * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);

    Eigen::MatrixXd rep(4, 3);
    for (int k = 0; k < 4; ++k) rep.row(k) = one.row(0);
    CHECK((sample_covariance(rep).matrix - C1).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("SampleCovariance eigendata is sorted and reconstructs") {
    Laplacian L = connected(7, 0.5, 31);
    SnapshotSet s = simulate_snapshots(L, FilterSpec({0.5 / L.lambda_max()}), 50, 1.3, 5);
    SampleCovariance cov = sample_covariance(s);
    CHECK((cov.matrix - cov.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index i = 1; i < cov.eigvals.size(); ++i) CHECK(cov.eigvals(i) <= cov.eigvals(i - 1));
    CHECK(cov.eigvals.minCoeff() >= -1e-10);
    Eigen::MatrixXd rebuilt = cov.eigvecs * cov.eigvals.asDiagonal() * cov.eigvecs.transpose();
    CHECK((rebuilt - cov.matrix).norm() <= 1e-9 * std::max(1.0, cov.matrix.norm()));
}

TEST_CASE("analytic_covariance matches the scalar filter response") {
    Laplacian L2 = two_node(); // eigenvalues {0, 2}
    // T=0: identity
    CHECK((analytic_covariance(L2, FilterSpec(std::vector<double>{}), 1.0) - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() <
          1e-14);

    // alpha = 0.25: h(0)=1, h(2)=0.5 -> eigenvalues {1, 0.25}
    Eigen::MatrixXd C = analytic_covariance(L2, FilterSpec({0.25}), 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    CHECK(es.eigenvalues()(0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) == doctest::Approx(1.0).epsilon(1e-12));

    // general graph: eigenvalues are sigma^2 h(lambda_i)^2
    Laplacian L = connected(6, 0.6, 12);
    FilterSpec f({0.3 / L.lambda_max(), 0.7 / L.lambda_max()});
    double sigma = 1.7;
    Eigen::MatrixXd Cg = analytic_covariance(L, f, sigma);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(Cg);
    Eigen::VectorXd want(6);
    for (int i = 0; i < 6; ++i) {
        double h = filter_response(f.rates, L.eigenvalues()(i));
        want(i) = sigma * sigma * h * h;
    }
    std::sort(want.data(), want.data() + 6);
    for (int i = 0; i < 6; ++i) CHECK(eg.eigenvalues()(i) == doctest::Approx(want(i)).epsilon(1e-10));

    CHECK(code_of([&] { analytic_covariance(L2, FilterSpec({0.51}), 1.0); }) == errc::unstable_rate);
}

TEST_CASE("covariance consistency: sample approaches analytic as M grows") {
    std::vector<double> err_small, err_large;
    for (std::uint64_t s = 0; s < 10; ++s) {
        Laplacian L = connected(8, 0.4, 100 + s);
        FilterSpec f({0.7 / L.lambda_max(), 0.8 / L.lambda_max(), 0.9 / L.lambda_max()});
        Eigen::MatrixXd C = analytic_covariance(L, f, 1.0);
        err_small.push_back(spec_norm(sample_covariance(simulate_snapshots(L, f, 100, 1.0, 7000 + s)).matrix - C));
        err_large.push_back(spec_norm(sample_covariance(simulate_snapshots(L, f, 10000, 1.0, 7000 + s)).matrix - C));
    }
    CHECK(median(err_large) < median(err_small));
}

TEST_CASE("uniform input has the requested power and support") {
    Eigen::MatrixXd X = simulate_inputs(4, 4000, 2.0, 3, InputModel::uniform());
    double bound = std::sqrt(3.0) * 2.0;
    CHECK(X.cwiseAbs().maxCoeff() <= bound);
    double var = X.array().square().mean();
    CHECK(var == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("AR(1) generator: a=0 is white, a=0.5 correlates consecutive samples") {
    const int n = 6;
    const Eigen::Index M = 4000;
    auto lag1 = [&](const Eigen::MatrixXd& X) {
        double num = 0.0, den = 0.0;
        for (Eigen::Index k = 0; k + 1 < X.rows(); ++k) {
            num += X.row(k).dot(X.row(k + 1));
            den += X.row(k).squaredNorm();
        }
        return num / den;
    };
    Eigen::MatrixXd white = simulate_inputs(n, M, 1.0, 11, InputModel::ar1(0.0));
    CHECK(std::abs(lag1(white)) < 0.1);
    CHECK(white.array().square().mean() == doctest::Approx(1.0).epsilon(0.1));

    Eigen::MatrixXd corr = simulate_inputs(n, M, 1.0, 11, InputModel::ar1(0.5));
    CHECK(lag1(corr) > 0.2);

    CHECK(code_of([&] { simulate_inputs(n, 5, 1.0, 1, InputModel::ar1(1.0)); }) == errc::invalid_params);
    CHECK(code_of([&] { simulate_inputs(n, 5, 1.0, 1, InputModel::ar1(-0.1)); }) == errc::invalid_params);
}

TEST_CASE("Wishart input covariance concentrates around the identity") {
    // E||C - I||_F^2 = N(N+1)/d for C = G G^T / d, so at N=10, d=100N the
    // Frobenius distance concentrates near sqrt(110/1000) ~ 0.33
    const int n = 10, d = 100 * n;
    std::vector<double> dist;
    for (std::uint64_t s = 0; s < 20; ++s)
        dist.push_back((wishart_covariance(n, d, s) - Eigen::MatrixXd::Identity(n, n)).norm());
    double med = median(dist);
    CHECK(med > 0.2);
    CHECK(med < 0.45);

    CHECK(code_of([&] { wishart_covariance(n, n - 1, 1); }) == errc::invalid_params);
    CHECK(code_of([&] { simulate_inputs(n, 5, 1.0, 1, InputModel::wishart(n - 1)); }) == errc::invalid_params);
}

TEST_CASE("wishart-driven snapshots carry the colored input through the filter") {
    Laplacian L = connected(5, 0.8, 2);
    FilterSpec f({0.5 / L.lambda_max()});
    SnapshotSet s = simulate_snapshots(L, f, 64, 1.0, 5, InputModel::wishart(500));
    CHECK(s.size() == 64);
    CHECK(s.provenance.input_kind == "wishart");
    CHECK(s.provenance.wishart_d == 500);
    CHECK(s.signals.allFinite());
}

TEST_CASE("random per-sample filters record provenance and vary t") {
    Laplacian L = connected(10, 0.4, 44);
    RandomFilterModel rm;
    rm.t_set = {3, 4, 5};
    SnapshotSet s = simulate_snapshots(L, rm, 200, 1.0, 13);
    CHECK(s.provenance.filter_kind == "random");
    CHECK(s.provenance.t_set == rm.t_set);
    SnapshotSet again = simulate_snapshots(L, rm, 200, 1.0, 13);
    CHECK((s.signals - again.signals).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mixed random filters: V diagonalizes S_M better as M grows") {
    // N=10 over 10 seeds, median of the max off-diagonal entry of V^T S_M V
    std::vector<double> off_small, off_large;
    for (std::uint64_t s = 0; s < 10; ++s) {
        Laplacian L = connected(10, 0.4, 300 + s);
        const Eigen::MatrixXd& V = L.eigenvectors();
        RandomFilterModel rm;
        auto offmax = [&](Eigen::Index M, std::uint64_t seed) {
            Eigen::MatrixXd S = sample_covariance(simulate_snapshots(L, rm, M, 1.0, seed)).matrix;
            Eigen::MatrixXd D = V.transpose() * S * V;
            double m = 0.0;
            for (int i = 0; i < 10; ++i)
                for (int j = 0; j < 10; ++j)
                    if (i != j) m = std::max(m, std::abs(D(i, j)));
            return m;
        };
        off_small.push_back(offmax(100, 40 + s));
        off_large.push_back(offmax(100000, 40 + s));
    }
    CHECK(median(off_large) < median(off_small));
}

TEST_CASE("mixed random filters: diagonal of V^T S_M V is decreasing at large M") {
    int ordered = 0, total = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        Laplacian L = connected(10, 0.4, 500 + s);
        const Eigen::MatrixXd& V = L.eigenvectors();
        RandomFilterModel rm;
        Eigen::MatrixXd S = sample_covariance(simulate_snapshots(L, rm, 100000, 1.0, 60 + s)).matrix;
        Eigen::VectorXd diag = (V.transpose() * S * V).diagonal();
        bool strict = true;
        for (int i = 1; i < 10; ++i)
            if (!(diag(i) < diag(i - 1))) strict = false;
        ordered += strict;
        ++total;
    }
    CHECK(static_cast<double>(ordered) / total >= 0.95);
}
