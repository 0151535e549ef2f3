#pragma once

#include "cglearn/graph.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace cglearn {

// Consensus filter h(L) = prod_t (I - alpha_t L). Rates must be strictly
// positive; stability (alpha_t < 1 / lambda_max) is checked where the filter
// meets a concrete Laplacian.
struct FilterSpec {
    std::vector<double> rates;

    FilterSpec() = default;
    explicit FilterSpec(std::vector<double> r);

    std::size_t length() const { return rates.size(); }
};

// Per-sample random filters: T_k uniform over t_set, each rate uniform on
// (0, 1/lambda_max) of the target Laplacian.
struct RandomFilterModel {
    std::vector<int> t_set = {3, 4, 5};
};

using FilterModel = std::variant<FilterSpec, RandomFilterModel>;

struct InputModel {
    enum class Kind { Gaussian, Uniform, Ar1, Wishart } kind = Kind::Gaussian;
    double ar_coeff = 0.0; // Ar1: xi_t = a xi_{t-1} + (1-a) w_t
    int stride = 1;        // Ar1: chain steps between consecutive samples
    int wishart_d = 1;     // Wishart: C = G G^T / d with G N x d standard normal

    static InputModel gaussian() { return {}; }
    static InputModel uniform() { return {Kind::Uniform, 0.0, 1, 1}; }
    static InputModel ar1(double a, int stride = 1) { return {Kind::Ar1, a, stride, 1}; }
    static InputModel wishart(int d) { return {Kind::Wishart, 0.0, 1, d}; }
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string filter_kind = "fixed"; // fixed | random
    std::vector<double> rates;         // fixed filters
    std::vector<int> t_set;            // random filters
    std::string input_kind = "gaussian";
    double ar_coeff = 0.0;
    int stride = 1;
    int wishart_d = 0;
    std::string graph_id;
};

// M filtered snapshots as rows; sigma2 is the input variance used to generate
// them (0 when unknown, e.g. ingested data).
struct SnapshotSet {
    Eigen::MatrixXd signals; // M x N
    double sigma2 = 1.0;
    Provenance provenance;

    SnapshotSet() = default;
    SnapshotSet(Eigen::MatrixXd s, double sigma2_, Provenance prov = {});

    Eigen::Index size() const { return signals.rows(); }
    Eigen::Index nodes() const { return signals.cols(); }
};

// Uncentered second-moment matrix with its eigendecomposition, eigenvalues
// nonincreasing and eigenvector columns matched to them.
struct SampleCovariance {
    Eigen::MatrixXd matrix;
    Eigen::VectorXd eigvals;
    Eigen::MatrixXd eigvecs;

    static SampleCovariance from_matrix(const Eigen::MatrixXd& m);
};

double filter_response(const std::vector<double>& rates, double lambda);

// y = h(L) x via length(rates) sequential mat-vec passes; the filter matrix is
// never formed.
Eigen::VectorXd apply_filter(const Laplacian& L, const FilterSpec& filter, const Eigen::VectorXd& x);

SnapshotSet simulate_snapshots(const Laplacian& L, const FilterModel& filters, Eigen::Index M, double sigma,
                               std::uint64_t seed, const InputModel& input = InputModel::gaussian());

SampleCovariance sample_covariance(const SnapshotSet& snapshots);
SampleCovariance sample_covariance(const Eigen::MatrixXd& signals);

// sigma^2 V h(Lambda)^2 V^T for a fixed filter.
Eigen::MatrixXd analytic_covariance(const Laplacian& L, const FilterSpec& filter, double sigma);

// Exposed for tests: the normalized-Wishart input covariance drawn for a given
// (seed, N, d) and the raw (unfiltered) input matrix of a simulation.
Eigen::MatrixXd wishart_covariance(int n, int d, std::uint64_t seed);
Eigen::MatrixXd simulate_inputs(int n, Eigen::Index M, double sigma, std::uint64_t seed, const InputModel& input);

} // namespace cglearn
