#include "cglearn/dynamics.hpp"
#include "cglearn/errors.hpp"
#include "cglearn/experiment.hpp"
#include "cglearn/graph.hpp"
#include "cglearn/io.hpp"
#include "cglearn/metrics.hpp"
#include "cglearn/solvers.hpp"
#include "cglearn/spectral.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace {

using namespace cglearn;
using nlohmann::json;

// Exit codes: 0 success, 2 usage/config, 3 IO/parse, 4 infeasibility,
// 5 numeric failure.
int exit_code_for(errc c) {
    switch (c) {
    case errc::invalid_params:
    case errc::dimension_mismatch:
    case errc::not_square:
    case errc::empty_filter:
    case errc::non_positive_rate:
    case errc::invalid_sigma:
    case errc::schema_error:
    case errc::empty_list:
        return 2;
    case errc::parse_error:
    case errc::io_error:
        return 3;
    case errc::infeasible:
    case errc::no_feasible_epsilon:
        return 4;
    default:
        return 5;
    }
}

struct SolverOverrides {
    std::optional<double> beta, epsilon, opt_tol, reweight_eps;
    std::optional<int> eta, t_max, reweight_iters, max_iters, binary_iters;
    std::optional<std::string> distance, eps_mode, ordering;
};

void add_solver_flags(CLI::App* cmd, SolverOverrides& o) {
    cmd->add_option("--beta", o.beta, "l1 weight of the regularized form");
    cmd->add_option("--epsilon", o.epsilon, "residual bound of the constraint form");
    cmd->add_option("--eps-mode", o.eps_mode, "off | fixed | grid-paper | binary");
    cmd->add_option("--eta", o.eta, "ordering lag");
    cmd->add_option("--t-max", o.t_max, "largest observation-time candidate");
    cmd->add_option("--distance", o.distance, "frobenius-sq | max-norm");
    cmd->add_option("--ordering", o.ordering, "lag-eta | leading-only");
    cmd->add_option("--reweight-iters", o.reweight_iters, "total reweighted-l1 passes");
    cmd->add_option("--reweight-eps", o.reweight_eps, "reweighting damping");
    cmd->add_option("--opt-tol", o.opt_tol, "first-order tolerance");
    cmd->add_option("--max-iters", o.max_iters, "first-order iteration cap");
    cmd->add_option("--binary-iters", o.binary_iters, "bisection steps of eps-mode binary");
}

void apply(SolverConfig& cfg, const SolverOverrides& o) {
    auto parse_enum = [&](const std::string& flag, const std::string& v) {
        json j;
        j[flag] = v;
        return j.dump();
    };
    if (o.beta) cfg.beta = *o.beta;
    if (o.epsilon) {
        cfg.epsilon = *o.epsilon;
        if (!o.eps_mode) cfg.eps_mode = EpsMode::Fixed;
    }
    if (o.eta) cfg.eta = *o.eta;
    if (o.t_max) cfg.t_max = *o.t_max;
    if (o.reweight_iters) cfg.reweight_iters = *o.reweight_iters;
    if (o.reweight_eps) cfg.reweight_eps = *o.reweight_eps;
    if (o.opt_tol) cfg.opt_tol = *o.opt_tol;
    if (o.max_iters) cfg.max_iters = *o.max_iters;
    if (o.binary_iters) cfg.binary_iters = *o.binary_iters;
    // reuse the JSON parser so flag spellings and config spellings stay identical
    if (o.eps_mode) cfg.eps_mode = solver_config_from_json(parse_enum("eps_mode", *o.eps_mode)).eps_mode;
    if (o.distance) cfg.distance = solver_config_from_json(parse_enum("distance", *o.distance)).distance;
    if (o.ordering) cfg.ordering = solver_config_from_json(parse_enum("ordering", *o.ordering)).ordering;
}

SolverConfig load_solver_config(const std::string& path, const SolverOverrides& o) {
    SolverConfig cfg;
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) fail(errc::io_error, "cannot open config: " + path);
        std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        cfg = solver_config_from_json(text);
    }
    apply(cfg, o);
    return cfg;
}

void ensure_parent_dir(const std::string& prefix) {
    std::filesystem::path p(prefix);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

FilterSpec filter_from_provenance(const Provenance& prov, const std::vector<double>& rate_override) {
    if (!rate_override.empty()) return FilterSpec(rate_override);
    if (prov.filter_kind == "fixed" && !prov.rates.empty()) return FilterSpec(prov.rates);
    fail(errc::invalid_params, "snapshot sidecar carries no fixed filter rates; pass --rates");
}

// ---------------------------------------------------------------- generate

struct GenerateOpts {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
};

int run_generate(const GenerateOpts& opt) {
    ExperimentSpec spec = experiment_from_file(opt.config);
    if (opt.seed) spec.base_seed = *opt.seed;

    std::uint64_t gseed = experiment_graph_seed(spec, spec.base_seed);
    if (opt.dry_run) {
        json j;
        j["name"] = spec.name;
        j["model"] = model_name(spec.graph.model);
        j["connected"] = spec.graph.connected;
        j["sigma"] = spec.sigma;
        j["base_seed"] = spec.base_seed;
        j["graph_seed"] = gseed;
        j["m_grid"] = json::array();
        for (auto M : spec.m_grid) {
            j["m_grid"].push_back(static_cast<long long>(M));
            j["data_seeds"].push_back(experiment_data_seed(spec, spec.base_seed, M));
        }
        j["filter"] = {{"kind", spec.filter.kind}, {"relative", spec.filter.relative}};
        if (!spec.filter.rates.empty()) j["filter"]["rates"] = spec.filter.rates;
        j["solver"] = json::parse(solver_config_to_json(spec.solver));
        std::cout << j.dump(2) << "\n";
        return 0;
    }

    std::filesystem::create_directories(opt.out);
    WeightedGraph g = spec.graph.connected
                          ? generate_connected(spec.graph.model, spec.graph.weights, gseed, spec.graph.gap_min)
                          : generate_graph(spec.graph.model, spec.graph.weights, gseed);
    Laplacian L = laplacian_of(g);

    io::GraphMeta meta;
    meta.seed = gseed;
    meta.model = model_name(spec.graph.model);
    std::string graph_path = opt.out + "/graph.json";
    io::write_graph_json(graph_path, g, meta);
    std::cout << "wrote " << graph_path << " (n=" << g.n << ", edges=" << g.edge_count() << ")\n";

    FilterModel filters;
    if (spec.filter.kind == "fixed") {
        std::vector<double> rates = spec.filter.rates;
        if (spec.filter.relative)
            for (double& r : rates) r /= L.lambda_max();
        filters = FilterSpec(rates);
    } else if (spec.filter.kind == "random") {
        RandomFilterModel rm;
        rm.t_set = spec.filter.t_set;
        filters = rm;
    } else {
        fail(errc::schema_error, "filter kind must be fixed|random");
    }

    for (auto M : spec.m_grid) {
        SnapshotSet snaps = simulate_snapshots(L, filters, M, spec.sigma,
                                               experiment_data_seed(spec, spec.base_seed, M), spec.input);
        std::string prefix = opt.out + "/snapshots_m" + std::to_string(static_cast<long long>(M));
        io::write_snapshots(prefix, snaps);
        std::cout << "wrote " << prefix << ".csv (M=" << M << ", N=" << snaps.nodes() << ")\n";
    }
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    std::string graph;
    std::string out;
    long long m = 0;
    double sigma = 1.0;
    std::uint64_t seed = 1;
    std::vector<double> rates;
    bool relative = false;
    bool random_filter = false;
    std::vector<int> t_set = {3, 4, 5};
    std::string input = "gaussian";
    double ar_coeff = 0.0;
    int stride = 1;
    int wishart_d = 1;
};

int run_simulate(const SimulateOpts& opt) {
    WeightedGraph g = io::read_graph_json(opt.graph);
    Laplacian L = laplacian_of(g);

    FilterModel filters;
    if (opt.random_filter) {
        RandomFilterModel rm;
        rm.t_set = opt.t_set;
        filters = rm;
    } else {
        if (opt.rates.empty()) fail(errc::invalid_params, "pass --rates or --random-filter");
        std::vector<double> rates = opt.rates;
        if (opt.relative)
            for (double& r : rates) r /= L.lambda_max();
        filters = FilterSpec(rates);
    }

    InputModel input;
    if (opt.input == "gaussian") input = InputModel::gaussian();
    else if (opt.input == "uniform") input = InputModel::uniform();
    else if (opt.input == "ar1") input = InputModel::ar1(opt.ar_coeff, opt.stride);
    else if (opt.input == "wishart") input = InputModel::wishart(opt.wishart_d);
    else fail(errc::invalid_params, "--input must be gaussian|uniform|ar1|wishart");

    SnapshotSet snaps = simulate_snapshots(L, filters, opt.m, opt.sigma, opt.seed, input);
    ensure_parent_dir(opt.out);
    io::write_snapshots(opt.out, snaps);
    std::cout << "wrote " << opt.out << ".csv (M=" << snaps.size() << ", N=" << snaps.nodes() << ")\n";
    return 0;
}

// ---------------------------------------------------------------- infer

struct InferOpts {
    std::string method;
    std::string snapshots;
    std::string out;
    std::string config;
    SolverOverrides overrides;
    std::vector<double> rates;
    int t = 0;
    std::string true_graph;
    bool trace_normalize = false;
    double edge_threshold = 1e-6;
};

int run_infer(const InferOpts& opt) {
    SnapshotSet snaps = io::read_snapshots(opt.snapshots);
    SampleCovariance cov = sample_covariance(snaps);
    SolverConfig cfg = load_solver_config(opt.config, opt.overrides);
    ensure_parent_dir(opt.out);

    std::optional<Eigen::MatrixXd> L_true;
    if (!opt.true_graph.empty()) L_true = laplacian_of(io::read_graph_json(opt.true_graph)).matrix();

    json report;
    report["method"] = opt.method;
    report["solver"] = json::parse(solver_config_to_json(cfg));

    Eigen::MatrixXd L_star;
    if (opt.method == "inversefilter") {
        SpectralEstimate est = inverse_filter(cov, filter_from_provenance(snaps.provenance, opt.rates));
        io::write_spectral_estimate(opt.out, est);
        L_star = est.L_hat;
        report["sigma2_hat"] = est.sigma2_hat;
    } else {
        CglSolution sol;
        if (opt.method == "nearestcgl") {
            SpectralEstimate est = inverse_filter(cov, filter_from_provenance(snaps.provenance, opt.rates));
            sol = nearest_cgl(est.L_hat, cfg);
        } else if (opt.method == "nearestcgl-known-t") {
            int t = opt.t;
            if (t == 0 && snaps.provenance.filter_kind == "fixed") t = static_cast<int>(snaps.provenance.rates.size());
            if (t < 1) fail(errc::invalid_params, "nearestcgl-known-t needs --t or a fixed-filter sidecar");
            sol = nearest_cgl(simplified_inverse_filter(cov, t).L_hat, cfg);
        } else if (opt.method == "orderedspectemp") {
            sol = ordered_spec_temp(cov, cfg);
        } else if (opt.method == "spectemp-leigvec") {
            SolverConfig c = cfg;
            c.ordering = Ordering::LeadingOnly;
            sol = ordered_spec_temp(cov, c);
        } else if (opt.method == "hybrid") {
            sol = hybrid(cov, cfg);
            report["t_hat"] = sol.diagnostics.t_hat;
        } else if (opt.method == "structglasso") {
            SpectralEstimate est = inverse_filter(cov, filter_from_provenance(snaps.provenance, opt.rates));
            sol = struct_glasso_baseline(est.L_hat, cfg);
        } else {
            fail(errc::invalid_params, "unknown method '" + opt.method + "'");
        }
        io::write_solution(opt.out, sol, opt.edge_threshold);
        L_star = sol.L_star;
    }

    if (L_true) {
        RecoveryReport rep = recovery_report(*L_true, L_star, opt.trace_normalize, opt.edge_threshold);
        report["metrics"] = json::parse(io::recovery_report_to_json(rep));
    }
    std::ofstream f(opt.out + "_run.json");
    if (!f) fail(errc::io_error, "cannot open for writing: " + opt.out + "_run.json");
    f << report.dump(2) << "\n";
    std::cout << "wrote " << opt.out << "_run.json\n";
    return 0;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOpts {
    std::string true_graph;
    std::string true_l;
    std::string estimate;
    std::string out;
    bool trace_normalize = false;
    double edge_threshold = 1e-6;
};

int run_evaluate(const EvaluateOpts& opt) {
    if (opt.true_graph.empty() == opt.true_l.empty())
        fail(errc::invalid_params, "pass exactly one of --true-graph / --true-l");
    Eigen::MatrixXd L_true = opt.true_graph.empty() ? io::read_matrix_csv(opt.true_l)
                                                    : laplacian_of(io::read_graph_json(opt.true_graph)).matrix();
    Eigen::MatrixXd L_star = io::read_matrix_csv(opt.estimate);
    RecoveryReport rep = recovery_report(L_true, L_star, opt.trace_normalize, opt.edge_threshold);
    std::string text = io::recovery_report_to_json(rep);
    if (!opt.out.empty()) {
        ensure_parent_dir(opt.out);
        io::write_recovery_report_json(opt.out, rep);
    }
    std::cout << text << "\n";
    return 0;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkOpts {
    std::string spec;
    std::string out = ".";
    int jobs = 0;
    std::optional<std::uint64_t> seed;
    SolverOverrides overrides;
    bool baseline = false;
};

int run_benchmark_cmd(const BenchmarkOpts& opt) {
    ExperimentSpec spec = experiment_from_file(opt.spec);
    if (opt.seed) spec.base_seed = *opt.seed;
    apply(spec.solver, opt.overrides);
    if (opt.baseline) {
        for (const char* extra : {"spectemp-leigvec", "structglasso"})
            if (std::find(spec.methods.begin(), spec.methods.end(), extra) == spec.methods.end())
                spec.methods.push_back(extra);
    }
    int jobs = opt.jobs > 0 ? opt.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    BenchmarkResult res = run_benchmark(spec, jobs);
    std::filesystem::create_directories(opt.out);
    std::string csv = opt.out + "/results.csv";
    write_benchmark_csv(csv, res.rows);
    std::string summary = opt.out + "/summary.json";
    std::ofstream f(summary);
    if (!f) fail(errc::io_error, "cannot open for writing: " + summary);
    f << res.summary_json << "\n";
    std::cout << "wrote " << csv << " and " << summary << " (" << res.rows.size() << " cells, jobs=" << jobs << ")\n";
    return 0;
}

// ---------------------------------------------------------------- ingest

struct IngestOpts {
    std::string format;
    std::string in;
    std::string out;
    double sigma2 = 0.0;
};

int run_ingest(const IngestOpts& opt) {
    SnapshotSet snaps;
    std::vector<std::string> states;
    if (opt.format == "matrix-csv") {
        snaps = io::ingest_matrix_csv(opt.in, opt.sigma2);
    } else if (opt.format == "roll-call") {
        snaps = io::ingest_roll_call_csv(opt.in, &states);
    } else {
        fail(errc::invalid_params, "--format must be matrix-csv|roll-call");
    }
    ensure_parent_dir(opt.out);
    io::write_snapshots(opt.out, snaps);
    if (!states.empty()) {
        json j;
        j["states"] = states;
        std::ofstream f(opt.out + "_states.json");
        if (!f) fail(errc::io_error, "cannot open for writing: " + opt.out + "_states.json");
        f << j.dump(2) << "\n";
    }
    std::cout << "ingested M=" << snaps.size() << ", N=" << snaps.nodes() << " -> " << opt.out << ".csv\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cglearn: combinatorial graph Laplacian learning from consensus snapshots"};
    app.require_subcommand(1);

    GenerateOpts gen;
    auto* cgen = app.add_subcommand("generate", "Generate a graph and simulated snapshot sets from a JSON spec");
    cgen->add_option("--config", gen.config, "experiment JSON")->required();
    cgen->add_option("--out", gen.out, "output directory");
    cgen->add_option("--seed", gen.seed, "base seed override");
    cgen->add_flag("--dry-run", gen.dry_run, "print the resolved spec, write nothing");
    cgen->callback([&] { (void)run_generate(gen); });

    SimulateOpts sim;
    auto* csim = app.add_subcommand("simulate", "Simulate snapshots on an existing graph file");
    csim->add_option("--graph", sim.graph, "graph JSON")->required();
    csim->add_option("--out", sim.out, "snapshot file prefix")->required();
    csim->add_option("--m", sim.m, "number of snapshots")->required();
    csim->add_option("--sigma", sim.sigma, "input standard deviation");
    csim->add_option("--seed", sim.seed, "RNG seed");
    csim->add_option("--rates", sim.rates, "fixed filter rates")->delimiter(',');
    csim->add_flag("--relative", sim.relative, "rates are multiples of 1/lambda_max");
    csim->add_flag("--random-filter", sim.random_filter, "per-sample random filters");
    csim->add_option("--t-set", sim.t_set, "random filter lengths")->delimiter(',');
    csim->add_option("--input", sim.input, "gaussian | uniform | ar1 | wishart");
    csim->add_option("--ar-coeff", sim.ar_coeff, "AR(1) coefficient");
    csim->add_option("--stride", sim.stride, "AR(1) steps between samples");
    csim->add_option("--wishart-d", sim.wishart_d, "Wishart degrees of freedom");
    csim->callback([&] { (void)run_simulate(sim); });

    InferOpts inf;
    auto* cinf = app.add_subcommand("infer", "Run one inference method on a snapshot file");
    cinf->add_option("--method", inf.method,
                     "inversefilter | nearestcgl | nearestcgl-known-t | orderedspectemp | "
                     "spectemp-leigvec | hybrid | structglasso")
        ->required();
    cinf->add_option("--snapshots", inf.snapshots, "snapshot file prefix")->required();
    cinf->add_option("--out", inf.out, "output file prefix")->required();
    cinf->add_option("--config", inf.config, "solver config JSON");
    cinf->add_option("--rates", inf.rates, "filter rates override")->delimiter(',');
    cinf->add_option("--t", inf.t, "known observation time for nearestcgl-known-t");
    cinf->add_option("--true-graph", inf.true_graph, "graph JSON to score against");
    cinf->add_flag("--trace-normalize", inf.trace_normalize, "rescale the estimate trace before scoring");
    cinf->add_option("--edge-threshold", inf.edge_threshold, "edge detection threshold");
    add_solver_flags(cinf, inf.overrides);
    cinf->callback([&] { (void)run_infer(inf); });

    EvaluateOpts ev;
    auto* cev = app.add_subcommand("evaluate", "Score an estimated Laplacian against the ground truth");
    cev->add_option("--true-graph", ev.true_graph, "graph JSON with the true topology");
    cev->add_option("--true-l", ev.true_l, "true Laplacian CSV");
    cev->add_option("--estimate", ev.estimate, "estimated Laplacian CSV")->required();
    cev->add_option("--out", ev.out, "write the report JSON here as well");
    cev->add_flag("--trace-normalize", ev.trace_normalize, "rescale the estimate trace before scoring");
    cev->add_option("--edge-threshold", ev.edge_threshold, "edge detection threshold");
    cev->callback([&] { (void)run_evaluate(ev); });

    BenchmarkOpts bm;
    auto* cbm = app.add_subcommand("benchmark", "Run a (method x M x seed) grid and emit plot-ready CSV");
    cbm->add_option("--spec", bm.spec, "experiment JSON")->required();
    cbm->add_option("--out", bm.out, "output directory");
    cbm->add_option("--jobs", bm.jobs, "worker threads (default: hardware concurrency)");
    cbm->add_option("--seed", bm.seed, "base seed override");
    cbm->add_flag("--baseline", bm.baseline, "append spectemp-leigvec and structglasso to the method list");
    add_solver_flags(cbm, bm.overrides);
    cbm->callback([&] { (void)run_benchmark_cmd(bm); });

    IngestOpts ing;
    auto* cing = app.add_subcommand("ingest", "Convert external data into snapshot files");
    cing->add_option("--format", ing.format, "matrix-csv | roll-call")->required();
    cing->add_option("--in", ing.in, "input file")->required();
    cing->add_option("--out", ing.out, "snapshot file prefix")->required();
    cing->add_option("--sigma2", ing.sigma2, "input variance to record (matrix-csv)");
    cing->callback([&] { (void)run_ingest(ing); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const cglearn::Error& e) {
        std::cerr << "error [" << errc_name(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
