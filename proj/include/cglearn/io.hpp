#pragma once

#include "cglearn/dynamics.hpp"
#include "cglearn/graph.hpp"
#include "cglearn/metrics.hpp"
#include "cglearn/solvers.hpp"
#include "cglearn/spectral.hpp"

#include <Eigen/Dense>
#include <optional>
#include <string>

namespace cglearn::io {

// Dense matrices: headerless CSV, row-major, 17 significant digits.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

struct GraphMeta {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> model;
    std::optional<std::string> params_json; // serialized generation params
};

// {"n": ..., "edges": [[i, j, w], ...]} plus optional metadata.
void write_graph_json(const std::string& path, const WeightedGraph& g, const GraphMeta& meta = {});
WeightedGraph read_graph_json(const std::string& path, GraphMeta* meta = nullptr);

// Edge list CSV with an "i,j,w" header.
void write_edges_csv(const std::string& path, const WeightedGraph& g);
WeightedGraph read_edges_csv(const std::string& path, int n);

// Snapshot sets: <prefix>.csv (M x N matrix) + <prefix>.json sidecar carrying
// sigma2, seed and filter metadata.
void write_snapshots(const std::string& prefix, const SnapshotSet& s);
SnapshotSet read_snapshots(const std::string& prefix);

// Spectral estimates: <prefix>.json {sigma2_hat, lambda_hat, L_hat_csv} with
// the dense L_hat in <prefix>_L.csv.
void write_spectral_estimate(const std::string& prefix, const SpectralEstimate& est);
SpectralEstimate read_spectral_estimate(const std::string& prefix);

// Solutions: <prefix>_L.csv dense matrix, <prefix>_edges.csv recovered edges
// (weight = -L_ij > threshold), <prefix>_diagnostics.json.
void write_solution(const std::string& prefix, const CglSolution& sol, double edge_threshold = 1e-6);

void write_recovery_report_json(const std::string& path, const RecoveryReport& rep);
std::string recovery_report_to_json(const RecoveryReport& rep);

// Ingestion. MatrixCsv: a numeric CSV of M snapshot rows. RollCall: header row
// names one state per column (two senators appear as two columns with the same
// state code); vote cells yea -> +1, nay -> -1, anything else -> 0; columns of
// the same state are summed into one node signal.
SnapshotSet ingest_matrix_csv(const std::string& path, double sigma2 = 0.0);
SnapshotSet ingest_roll_call_csv(const std::string& path, std::vector<std::string>* state_order = nullptr);

} // namespace cglearn::io
