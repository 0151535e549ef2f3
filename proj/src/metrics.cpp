#include "cglearn/metrics.hpp"

#include "cglearn/errors.hpp"

#include <cmath>

namespace cglearn {

namespace {

void check_pair(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (A.rows() != A.cols() || B.rows() != B.cols()) fail(errc::not_square, "matrices must be square");
    if (A.rows() != B.rows()) fail(errc::dimension_mismatch, "matrix sizes differ");
    if (!A.allFinite() || !B.allFinite()) fail(errc::non_finite, "matrices must be finite");
}

void count_support(const Eigen::MatrixXd& L_true, const Eigen::MatrixXd& L_star, double threshold,
                   RecoveryReport& rep) {
    const auto n = L_true.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            bool t = -L_true(i, j) > threshold;
            bool s = -L_star(i, j) > threshold;
            if (t && s) ++rep.true_positives;
            else if (!t && s) ++rep.false_positives;
            else if (t && !s) ++rep.false_negatives;
        }
    int denom = 2 * rep.true_positives + rep.false_positives + rep.false_negatives;
    rep.f_score = denom == 0 ? 1.0 : 2.0 * rep.true_positives / static_cast<double>(denom);
}

} // namespace

double recovery_error(const Eigen::MatrixXd& L_true, const Eigen::MatrixXd& L_star, bool trace_normalize) {
    check_pair(L_true, L_star);
    double denom = L_true.norm();
    if (denom <= 0.0) fail(errc::zero_true_norm, "reference matrix has zero Frobenius norm");
    Eigen::MatrixXd est = L_star;
    if (trace_normalize) {
        double tr = L_star.trace();
        if (tr <= 0.0) fail(errc::zero_estimate_trace, "estimate trace must be > 0 to normalize");
        est *= L_true.trace() / tr;
    }
    return (L_true - est).norm() / denom;
}

double f_score(const Eigen::MatrixXd& L_true, const Eigen::MatrixXd& L_star, double threshold) {
    check_pair(L_true, L_star);
    RecoveryReport rep;
    count_support(L_true, L_star, threshold, rep);
    return rep.f_score;
}

RecoveryReport recovery_report(const Eigen::MatrixXd& L_true, const Eigen::MatrixXd& L_star, bool trace_normalize,
                               double threshold) {
    check_pair(L_true, L_star);
    RecoveryReport rep;
    rep.trace_normalized = trace_normalize;
    rep.edge_threshold = threshold;
    rep.rel_error = recovery_error(L_true, L_star, trace_normalize);
    count_support(L_true, L_star, threshold, rep);
    return rep;
}

double recovery_rate(const std::vector<double>& errors, double success_threshold) {
    if (errors.empty()) fail(errc::empty_list, "recovery rate needs at least one error value");
    std::size_t hits = 0;
    for (double e : errors)
        if (e < success_threshold) ++hits; // strict
    return static_cast<double>(hits) / static_cast<double>(errors.size());
}

} // namespace cglearn
