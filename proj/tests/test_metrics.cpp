#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cglearn/errors.hpp"
#include "cglearn/graph.hpp"
#include "cglearn/metrics.hpp"
#include "cglearn/rng.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

using namespace cglearn;

namespace {

errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return errc::numeric_failure;
}

// brute-force confusion counts over the strict upper triangle
struct Counts {
    int tp = 0, fp = 0, fn = 0;
};

Counts count_support(const Eigen::MatrixXd& t, const Eigen::MatrixXd& e, double thr) {
    Counts c;
    for (Eigen::Index i = 0; i < t.rows(); ++i)
        for (Eigen::Index j = i + 1; j < t.cols(); ++j) {
            bool in_t = -t(i, j) > thr;
            bool in_e = -e(i, j) > thr;
            if (in_t && in_e) ++c.tp;
            if (!in_t && in_e) ++c.fp;
            if (in_t && !in_e) ++c.fn;
        }
    return c;
}

Eigen::MatrixXd random_laplacian(int n, double p, std::uint64_t seed) {
    return laplacian_of(generate_graph(ErParams{n, p}, WeightDist::uniform(0.4, 2.0), seed)).matrix();
}

} // namespace

TEST_CASE("recovery_error examples") {
    Eigen::MatrixXd L(2, 2);
    L << 1, -1, -1, 1;
    CHECK(recovery_error(L, L) == 0.0);
    CHECK(recovery_error(L, 2.0 * L, true) == doctest::Approx(0.0).epsilon(1e-14));

    Eigen::MatrixXd P(2, 2);
    P << 1.1, -1.1, -1.1, 1.1;
    CHECK(recovery_error(L, P) == doctest::Approx(0.1).epsilon(1e-12));

    // unnormalized: scaling matters
    CHECK(recovery_error(L, 2.0 * L) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("recovery_error error paths") {
    Eigen::MatrixXd L(2, 2);
    L << 1, -1, -1, 1;
    CHECK(code_of([&] { recovery_error(Eigen::MatrixXd::Zero(2, 2), L); }) == errc::zero_true_norm);
    CHECK(code_of([&] { recovery_error(L, Eigen::MatrixXd::Zero(2, 2), true); }) == errc::zero_estimate_trace);
    CHECK(code_of([&] { recovery_error(L, Eigen::MatrixXd::Zero(3, 3)); }) == errc::dimension_mismatch);
    // unnormalized zero estimate is fine: error = 1
    CHECK(recovery_error(L, Eigen::MatrixXd::Zero(2, 2)) == doctest::Approx(1.0));
}

TEST_CASE("f_score examples") {
    Eigen::MatrixXd L(3, 3);
    L << 2, -1, -1, -1, 1, 0, -1, 0, 1;
    CHECK(f_score(L, L) == 1.0);
    CHECK(f_score(L, Eigen::MatrixXd::Zero(3, 3)) == 0.0);
    CHECK(f_score(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3)) == 1.0);

    // constructed 4-node pair: truth has {01,12,23}, estimate has {01,12,03}
    // -> tp=2 (01,12), fp=1 (03), fn=1 (23), f = 2*2/(4+1+1) = 2/3
    auto lap = [](std::vector<Edge> edges) { return laplacian_of(WeightedGraph(4, std::move(edges))).matrix(); };
    Eigen::MatrixXd truth = lap({{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
    Eigen::MatrixXd est = lap({{0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 1.0}});
    CHECK(f_score(truth, est) == doctest::Approx(2.0 / 3.0));

    CHECK(code_of([&] { f_score(truth, Eigen::MatrixXd::Zero(3, 3)); }) == errc::dimension_mismatch);
}

TEST_CASE("f_score equals the brute-force confusion formula on random pairs") {
    for (std::uint64_t s = 0; s < 30; ++s) {
        Eigen::MatrixXd t = random_laplacian(6, 0.4, 10 + s);
        Eigen::MatrixXd e = random_laplacian(6, 0.4, 200 + s);
        Counts c = count_support(t, e, 1e-6);
        double want = (c.tp + c.fp + c.fn) == 0 ? 1.0 : 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn);
        CHECK(f_score(t, e) == doctest::Approx(want).epsilon(1e-14));
        // swapping roles swaps fp and fn but preserves the score
        CHECK(f_score(e, t) == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("recovery_report bundles the pieces") {
    auto lap = [](std::vector<Edge> edges) { return laplacian_of(WeightedGraph(4, std::move(edges))).matrix(); };
    Eigen::MatrixXd truth = lap({{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}});
    Eigen::MatrixXd est = lap({{0, 1, 1.0}, {1, 2, 1.0}, {0, 3, 1.0}});
    RecoveryReport r = recovery_report(truth, est, false, 1e-6);
    CHECK(r.true_positives == 2);
    CHECK(r.false_positives == 1);
    CHECK(r.false_negatives == 1);
    CHECK(r.f_score == doctest::Approx(2.0 / 3.0));
    CHECK(r.rel_error == doctest::Approx(recovery_error(truth, est)));
    CHECK(r.trace_normalized == false);
    CHECK(r.edge_threshold == 1e-6);

    RecoveryReport rn = recovery_report(truth, 3.0 * truth, true);
    CHECK(rn.rel_error == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(rn.trace_normalized == true);
    CHECK(rn.f_score == 1.0);
}

TEST_CASE("recovery_rate thresholding is strict") {
    CHECK(recovery_rate({0.0, 0.0, 0.0}) == 1.0);
    CHECK(recovery_rate({0.01, 0.03}) == 0.5);
    CHECK(recovery_rate({0.02}) == 0.0); // at-threshold counts as failure
    CHECK(recovery_rate({0.5, 0.01, 0.019, 0.021}, 0.02) == doctest::Approx(0.5));
    CHECK(code_of([] { recovery_rate({}); }) == errc::empty_list);
}

TEST_CASE("recovery_error triangle sanity on random triples") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        Eigen::MatrixXd A = random_laplacian(5, 0.5, 300 + s);
        Eigen::MatrixXd B = random_laplacian(5, 0.5, 400 + s);
        Eigen::MatrixXd C = random_laplacian(5, 0.5, 500 + s);
        if (A.norm() == 0.0 || B.norm() == 0.0 || C.norm() == 0.0) continue;
        double lhs = recovery_error(C, A);
        double rhs = recovery_error(B, A) * B.norm() / C.norm() + recovery_error(C, B);
        CHECK(lhs <= rhs + 1e-12);
    }
}
