#pragma once

#include "cglearn/dynamics.hpp"
#include "cglearn/graph.hpp"
#include "cglearn/solvers.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cglearn {

struct GraphSpec {
    GraphModel model = ErParams{};
    WeightDist weights;
    bool connected = true;
    double gap_min = 1e-4;
};

struct FilterConfig {
    std::string kind = "fixed"; // fixed | random
    std::vector<double> rates;  // fixed filters; multiples of 1/lambda_max when relative
    bool relative = false;
    std::vector<int> t_set = {3, 4, 5};
};

// One benchmark run: a graph family, a dynamics setting, an M grid, seeds and
// a method list. "nearestcgl" rows are replicated across beta_sweep when given.
struct ExperimentSpec {
    std::string name = "experiment";
    GraphSpec graph;
    FilterConfig filter;
    InputModel input;
    double sigma = 1.0;
    std::vector<Eigen::Index> m_grid;
    int seed_count = 1;
    std::uint64_t base_seed = 1;
    std::vector<std::string> methods;
    std::vector<double> beta_sweep;
    SolverConfig solver;
    bool trace_normalize = false;
    double edge_threshold = 1e-6;
    double success_threshold = 0.02;
    int known_t = 0; // nearestcgl-known-t candidate; 0 = filter length
};

struct CellResult {
    std::string method;
    Eigen::Index M = 0;
    std::uint64_t seed = 0;
    double rel_error = 0.0;
    double f_score = 0.0;
    double wall_ms = 0.0;
    int t_hat = 0;       // hybrid rows
    std::string error;   // error tag for failed cells, empty otherwise
};

struct BenchmarkResult {
    std::vector<CellResult> rows; // sorted by (method listing order, M, seed)
    std::string summary_json;
};

// Supported methods: inversefilter, nearestcgl, nearestcgl-known-t,
// orderedspectemp, spectemp-leigvec, hybrid, structglasso.
BenchmarkResult run_benchmark(const ExperimentSpec& spec, int jobs = 1);

void write_benchmark_csv(const std::string& path, const std::vector<CellResult>& rows);

// JSON <-> config plumbing shared by the CLI and tests.
SolverConfig solver_config_from_json(const std::string& json_text);
std::string solver_config_to_json(const SolverConfig& cfg);
GraphModel graph_model_from_json(const std::string& json_text);
ExperimentSpec experiment_from_json(const std::string& json_text);
ExperimentSpec experiment_from_file(const std::string& path);

// Deterministic per-cell derivations, exposed for tests.
std::uint64_t experiment_graph_seed(const ExperimentSpec& spec, std::uint64_t seed);
std::uint64_t experiment_data_seed(const ExperimentSpec& spec, std::uint64_t seed, Eigen::Index M);

// Runs fn(0..count-1) on a pool of `jobs` threads; fn must not throw.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

} // namespace cglearn
