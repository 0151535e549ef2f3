#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cglearn {

struct RecoveryReport {
    double rel_error = 0.0;
    double f_score = 0.0;
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;
    bool trace_normalized = false;
    double edge_threshold = 1e-6;
};

// ||L_true - L_star||_F / ||L_true||_F; trace_normalize first rescales L_star
// by tr(L_true)/tr(L_star).
double recovery_error(const Eigen::MatrixXd& L_true, const Eigen::MatrixXd& L_star, bool trace_normalize = false);

// Edge support = off-diagonal entries with -L_ij > threshold. Two empty
// supports score 1.
double f_score(const Eigen::MatrixXd& L_true, const Eigen::MatrixXd& L_star, double threshold = 1e-6);

RecoveryReport recovery_report(const Eigen::MatrixXd& L_true, const Eigen::MatrixXd& L_star,
                               bool trace_normalize = false, double threshold = 1e-6);

// Fraction of errors strictly below the success threshold.
double recovery_rate(const std::vector<double>& errors, double success_threshold = 0.02);

} // namespace cglearn
