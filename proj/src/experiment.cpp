#include "cglearn/experiment.hpp"

#include "cglearn/errors.hpp"
#include "cglearn/metrics.hpp"
#include "cglearn/rng.hpp"
#include "cglearn/spectral.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <thread>

namespace cglearn {

using nlohmann::json;

namespace {

constexpr std::uint64_t kGraphSalt = 0x67726170ULL;
constexpr std::uint64_t kDataSalt = 0x64617461ULL;

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json parse(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) fail(errc::parse_error, "invalid JSON");
    return j;
}

} // namespace

SolverConfig solver_config_from_json(const std::string& json_text) {
    json j = parse(json_text);
    if (!j.is_object()) fail(errc::schema_error, "solver config must be a JSON object");
    SolverConfig cfg;
    cfg.beta = j.value("beta", cfg.beta);
    cfg.epsilon = j.value("epsilon", cfg.epsilon);
    if (j.contains("eps_mode")) {
        std::string m = j["eps_mode"].get<std::string>();
        if (m == "off") cfg.eps_mode = EpsMode::Off;
        else if (m == "fixed") cfg.eps_mode = EpsMode::Fixed;
        else if (m == "grid-paper") cfg.eps_mode = EpsMode::GridPaper;
        else if (m == "binary") cfg.eps_mode = EpsMode::Binary;
        else fail(errc::schema_error, "eps_mode must be off|fixed|grid-paper|binary");
    }
    cfg.binary_iters = j.value("binary_iters", cfg.binary_iters);
    cfg.eta = j.value("eta", cfg.eta);
    if (j.contains("distance")) {
        std::string d = j["distance"].get<std::string>();
        if (d == "frobenius-sq") cfg.distance = Distance::FrobeniusSq;
        else if (d == "max-norm") cfg.distance = Distance::MaxNorm;
        else fail(errc::schema_error, "distance must be frobenius-sq|max-norm");
    }
    if (j.contains("ordering")) {
        std::string o = j["ordering"].get<std::string>();
        if (o == "lag-eta") cfg.ordering = Ordering::LagEta;
        else if (o == "leading-only") cfg.ordering = Ordering::LeadingOnly;
        else fail(errc::schema_error, "ordering must be lag-eta|leading-only");
    }
    cfg.reweight_iters = j.value("reweight_iters", cfg.reweight_iters);
    cfg.reweight_eps = j.value("reweight_eps", cfg.reweight_eps);
    cfg.opt_tol = j.value("opt_tol", cfg.opt_tol);
    cfg.max_iters = j.value("max_iters", cfg.max_iters);
    cfg.t_max = j.value("t_max", cfg.t_max);
    return cfg;
}

std::string solver_config_to_json(const SolverConfig& cfg) {
    json j;
    j["beta"] = cfg.beta;
    j["epsilon"] = cfg.epsilon;
    switch (cfg.eps_mode) {
    case EpsMode::Off: j["eps_mode"] = "off"; break;
    case EpsMode::Fixed: j["eps_mode"] = "fixed"; break;
    case EpsMode::GridPaper: j["eps_mode"] = "grid-paper"; break;
    case EpsMode::Binary: j["eps_mode"] = "binary"; break;
    }
    j["binary_iters"] = cfg.binary_iters;
    j["eta"] = cfg.eta;
    j["distance"] = cfg.distance == Distance::FrobeniusSq ? "frobenius-sq" : "max-norm";
    j["ordering"] = cfg.ordering == Ordering::LagEta ? "lag-eta" : "leading-only";
    j["reweight_iters"] = cfg.reweight_iters;
    j["reweight_eps"] = cfg.reweight_eps;
    j["opt_tol"] = cfg.opt_tol;
    j["max_iters"] = cfg.max_iters;
    j["t_max"] = cfg.t_max;
    return j.dump(2);
}

namespace {

GraphModel graph_model_from(const json& g) {
    std::string model = g.value("model", "er");
    if (model == "er") {
        ErParams p;
        p.n = g.value("n", 0);
        p.p = g.value("p", 0.0);
        return p;
    }
    if (model == "sbm") {
        SbmParams p;
        p.n = g.value("n", 0);
        if (g.contains("block_sizes")) p.block_sizes = g["block_sizes"].get<std::vector<int>>();
        p.p_within = g.value("p_within", 0.0);
        p.p_across = g.value("p_across", 0.0);
        return p;
    }
    if (model == "watts-strogatz") {
        WattsStrogatzParams p;
        p.n = g.value("n", 0);
        p.k = g.value("k", 2);
        p.p_rewire = g.value("p_rewire", 0.0);
        return p;
    }
    if (model == "barabasi-albert") {
        BarabasiAlbertParams p;
        p.n = g.value("n", 0);
        p.m_attach = g.value("m_attach", 1);
        return p;
    }
    if (model == "grid") {
        GridParams p;
        p.n = g.value("n", 0);
        p.rows = g.value("rows", 0);
        p.cols = g.value("cols", 0);
        return p;
    }
    fail(errc::schema_error, "unknown graph model '" + model + "'");
}

WeightDist weights_from(const json& w) {
    std::string kind = w.value("kind", "unit");
    if (kind == "unit") return WeightDist::unit();
    if (kind == "uniform") return WeightDist::uniform(w.value("lo", 0.0), w.value("hi", 1.0));
    fail(errc::schema_error, "weights kind must be unit|uniform");
}

InputModel input_from(const json& in) {
    std::string kind = in.value("kind", "gaussian");
    if (kind == "gaussian") return InputModel::gaussian();
    if (kind == "uniform") return InputModel::uniform();
    if (kind == "ar1") return InputModel::ar1(in.value("a", 0.0), in.value("stride", 1));
    if (kind == "wishart") return InputModel::wishart(in.value("d", 1));
    fail(errc::schema_error, "input kind must be gaussian|uniform|ar1|wishart");
}

} // namespace

GraphModel graph_model_from_json(const std::string& json_text) {
    return graph_model_from(parse(json_text));
}

ExperimentSpec experiment_from_json(const std::string& json_text) {
    json j = parse(json_text);
    if (!j.is_object()) fail(errc::schema_error, "experiment spec must be a JSON object");
    ExperimentSpec spec;
    spec.name = j.value("name", spec.name);
    if (!j.contains("graph")) fail(errc::schema_error, "experiment spec needs a 'graph' object");
    const auto& g = j["graph"];
    spec.graph.model = graph_model_from(g);
    if (g.contains("weights")) spec.graph.weights = weights_from(g["weights"]);
    spec.graph.connected = g.value("connected", true);
    spec.graph.gap_min = g.value("gap_min", 1e-4);
    if (j.contains("filter")) {
        const auto& f = j["filter"];
        spec.filter.kind = f.value("kind", "fixed");
        if (f.contains("rates")) spec.filter.rates = f["rates"].get<std::vector<double>>();
        spec.filter.relative = f.value("relative", false);
        if (f.contains("t_set")) spec.filter.t_set = f["t_set"].get<std::vector<int>>();
    }
    if (j.contains("input")) spec.input = input_from(j["input"]);
    spec.sigma = j.value("sigma", 1.0);
    if (!j.contains("m_grid")) fail(errc::schema_error, "experiment spec needs m_grid");
    for (auto m : j["m_grid"].get<std::vector<long long>>()) spec.m_grid.push_back(static_cast<Eigen::Index>(m));
    if (spec.m_grid.empty()) fail(errc::schema_error, "m_grid must be nonempty");
    spec.seed_count = j.value("seed_count", 1);
    spec.base_seed = j.value("base_seed", 1ULL);
    if (j.contains("methods")) spec.methods = j["methods"].get<std::vector<std::string>>();
    static const std::vector<std::string> known = {"inversefilter", "nearestcgl",      "nearestcgl-known-t",
                                                   "orderedspectemp", "spectemp-leigvec", "hybrid",
                                                   "structglasso"};
    for (const auto& m : spec.methods)
        if (std::find(known.begin(), known.end(), m) == known.end())
            fail(errc::schema_error, "unknown method '" + m + "'");
    if (j.contains("beta_sweep")) spec.beta_sweep = j["beta_sweep"].get<std::vector<double>>();
    if (j.contains("solver")) spec.solver = solver_config_from_json(j["solver"].dump());
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        spec.trace_normalize = m.value("trace_normalize", false);
        spec.edge_threshold = m.value("edge_threshold", 1e-6);
        spec.success_threshold = m.value("success_threshold", 0.02);
    }
    spec.known_t = j.value("known_t", 0);
    return spec;
}

ExperimentSpec experiment_from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(errc::io_error, "cannot open experiment spec: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return experiment_from_json(text);
}

std::uint64_t experiment_graph_seed(const ExperimentSpec& spec, std::uint64_t seed) {
    return mix_seed(mix_seed(spec.base_seed, seed), kGraphSalt);
}

std::uint64_t experiment_data_seed(const ExperimentSpec& spec, std::uint64_t seed, Eigen::Index M) {
    return mix_seed(mix_seed(spec.base_seed, seed), kDataSalt, static_cast<std::uint64_t>(M));
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    std::size_t k = std::min(static_cast<std::size_t>(jobs), count);
    pool.reserve(k);
    for (std::size_t t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

namespace {

struct CellTask {
    std::string label;
    std::string method; // base method name
    double beta = 0.0;
    bool beta_override = false;
    Eigen::Index M = 0;
    std::uint64_t seed = 0;
};

FilterSpec resolve_rates(const FilterConfig& fc, double lambda_max) {
    std::vector<double> rates = fc.rates;
    if (fc.relative)
        for (double& r : rates) r /= lambda_max;
    return FilterSpec(rates);
}

CellResult run_cell(const ExperimentSpec& spec, const CellTask& task) {
    CellResult row;
    row.method = task.label;
    row.M = task.M;
    row.seed = task.seed;
    auto t0 = std::chrono::steady_clock::now();
    try {
        WeightedGraph g = spec.graph.connected
                              ? generate_connected(spec.graph.model, spec.graph.weights,
                                                   experiment_graph_seed(spec, task.seed), spec.graph.gap_min)
                              : generate_graph(spec.graph.model, spec.graph.weights, experiment_graph_seed(spec, task.seed));
        Laplacian L = laplacian_of(g);

        FilterModel filters;
        FilterSpec fixed;
        if (spec.filter.kind == "fixed") {
            fixed = resolve_rates(spec.filter, L.lambda_max());
            filters = fixed;
        } else if (spec.filter.kind == "random") {
            RandomFilterModel rm;
            rm.t_set = spec.filter.t_set;
            filters = rm;
        } else {
            fail(errc::schema_error, "filter kind must be fixed|random");
        }

        SnapshotSet snaps = simulate_snapshots(L, filters, task.M, spec.sigma,
                                               experiment_data_seed(spec, task.seed, task.M), spec.input);
        SampleCovariance cov = sample_covariance(snaps);

        SolverConfig cfg = spec.solver;
        if (task.beta_override) cfg.beta = task.beta;

        Eigen::MatrixXd L_star;
        int t_hat = 0;
        if (task.method == "inversefilter") {
            L_star = inverse_filter(cov, fixed).L_hat;
        } else if (task.method == "nearestcgl") {
            L_star = nearest_cgl(inverse_filter(cov, fixed).L_hat, cfg).L_star;
        } else if (task.method == "nearestcgl-known-t") {
            int t = spec.known_t > 0 ? spec.known_t : static_cast<int>(fixed.length());
            if (t < 1) fail(errc::invalid_params, "nearestcgl-known-t needs a filter length or known_t");
            L_star = nearest_cgl(simplified_inverse_filter(cov, t).L_hat, cfg).L_star;
        } else if (task.method == "orderedspectemp") {
            L_star = ordered_spec_temp(cov, cfg).L_star;
        } else if (task.method == "spectemp-leigvec") {
            cfg.ordering = Ordering::LeadingOnly;
            L_star = ordered_spec_temp(cov, cfg).L_star;
        } else if (task.method == "hybrid") {
            CglSolution sol = hybrid(cov, cfg);
            L_star = sol.L_star;
            t_hat = sol.diagnostics.t_hat;
        } else if (task.method == "structglasso") {
            L_star = struct_glasso_baseline(inverse_filter(cov, fixed).L_hat, cfg).L_star;
        } else {
            fail(errc::schema_error, "unknown method '" + task.method + "'");
        }

        RecoveryReport rep = recovery_report(L.matrix(), L_star, spec.trace_normalize, spec.edge_threshold);
        row.rel_error = rep.rel_error;
        row.f_score = rep.f_score;
        row.t_hat = t_hat;
    } catch (const Error& e) {
        row.error = errc_name(e.code());
        row.rel_error = std::numeric_limits<double>::quiet_NaN();
        row.f_score = std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception&) {
        row.error = "Unexpected";
        row.rel_error = std::numeric_limits<double>::quiet_NaN();
        row.f_score = std::numeric_limits<double>::quiet_NaN();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

std::string beta_label(const std::string& method, double beta) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s[beta=%g]", method.c_str(), beta);
    return buf;
}

} // namespace

BenchmarkResult run_benchmark(const ExperimentSpec& spec, int jobs) {
    if (spec.m_grid.empty() || spec.methods.empty() || spec.seed_count < 1)
        fail(errc::invalid_params, "benchmark needs m_grid, methods and seed_count >= 1");

    std::vector<CellTask> tasks;
    for (const auto& method : spec.methods) {
        bool sweep = method == "nearestcgl" && !spec.beta_sweep.empty();
        for (Eigen::Index M : spec.m_grid)
            for (int s = 0; s < spec.seed_count; ++s) {
                std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(s);
                if (sweep) {
                    for (double b : spec.beta_sweep)
                        tasks.push_back({beta_label(method, b), method, b, true, M, seed});
                } else {
                    tasks.push_back({method, method, 0.0, false, M, seed});
                }
            }
    }

    std::vector<CellResult> rows(tasks.size());
    parallel_for(tasks.size(), jobs, [&](std::size_t i) { rows[i] = run_cell(spec, tasks[i]); });

    // summary per (method label, M)
    std::map<std::string, std::map<Eigen::Index, std::vector<const CellResult*>>> bucket;
    for (const auto& r : rows) bucket[r.method][r.M].push_back(&r);
    json summary;
    summary["name"] = spec.name;
    summary["cells"] = json::array();
    for (const auto& [method, by_m] : bucket)
        for (const auto& [M, cell] : by_m) {
            std::vector<double> errs, fs;
            int failed = 0;
            for (const auto* r : cell) {
                if (r->error.empty()) {
                    errs.push_back(r->rel_error);
                    fs.push_back(r->f_score);
                } else {
                    ++failed;
                }
            }
            json c;
            c["method"] = method;
            c["M"] = static_cast<long long>(M);
            c["count"] = cell.size();
            c["failed"] = failed;
            if (!errs.empty()) {
                c["median_rel_error"] = median(errs);
                c["mean_rel_error"] = std::accumulate(errs.begin(), errs.end(), 0.0) / errs.size();
                c["median_f_score"] = median(fs);
                c["recovery_rate"] = recovery_rate(errs, spec.success_threshold);
            }
            summary["cells"].push_back(c);
        }

    BenchmarkResult out;
    out.rows = std::move(rows);
    out.summary_json = summary.dump(2);
    return out;
}

void write_benchmark_csv(const std::string& path, const std::vector<CellResult>& rows) {
    std::ofstream f(path);
    if (!f) fail(errc::io_error, "cannot open for writing: " + path);
    f << "method,M,seed,rel_error,f_score,wall_ms,error\n";
    auto num = [](double v) {
        if (std::isnan(v)) return std::string("nan");
        char b[64];
        std::snprintf(b, sizeof(b), "%.17g", v);
        return std::string(b);
    };
    for (const auto& r : rows) {
        char wall[64];
        std::snprintf(wall, sizeof(wall), "%.3f", r.wall_ms);
        f << r.method << ',' << r.M << ',' << r.seed << ',' << num(r.rel_error) << ',' << num(r.f_score) << ','
          << wall << ',' << r.error << '\n';
    }
}

} // namespace cglearn
