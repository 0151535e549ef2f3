#include "cglearn/io.hpp"

#include "cglearn/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cglearn::io {

using nlohmann::json;

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path);
    if (!f) fail(errc::io_error, "cannot open for writing: " + path);
    return f;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(errc::io_error, "cannot open for reading: " + path);
    return f;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::string& path, std::size_t lineno) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        while (used < s.size() && std::isspace(static_cast<unsigned char>(s[used]))) ++used;
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail(errc::parse_error, path + ":" + std::to_string(lineno) + ": not a number: '" + s + "'");
    }
}

json load_json(const std::string& path) {
    auto f = open_in(path);
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded()) fail(errc::parse_error, "invalid JSON in " + path);
    return j;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

} // namespace

void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m) {
    auto f = open_out(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) f << ',';
            f << fmt17(m(i, j));
        }
        f << '\n';
    }
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    auto f = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(trim(c), path, lineno));
        if (!rows.empty() && row.size() != rows.front().size())
            fail(errc::parse_error, path + ":" + std::to_string(lineno) + ": ragged row (expected " +
                                        std::to_string(rows.front().size()) + " columns, got " + std::to_string(row.size()) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(errc::parse_error, path + ": empty matrix");
    Eigen::MatrixXd m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
    return m;
}

void write_graph_json(const std::string& path, const WeightedGraph& g, const GraphMeta& meta) {
    json j;
    j["n"] = g.n;
    auto& edges = j["edges"] = json::array();
    for (const auto& e : g.edges) edges.push_back({e.i, e.j, e.w});
    if (meta.seed) j["seed"] = *meta.seed;
    if (meta.model) j["model"] = *meta.model;
    if (meta.params_json) {
        json p = json::parse(*meta.params_json, nullptr, false);
        j["params"] = p.is_discarded() ? json(*meta.params_json) : p;
    }
    auto f = open_out(path);
    f << j.dump(2) << '\n';
}

WeightedGraph read_graph_json(const std::string& path, GraphMeta* meta) {
    json j = load_json(path);
    if (!j.contains("n") || !j.contains("edges") || !j["n"].is_number_integer() || !j["edges"].is_array())
        fail(errc::schema_error, path + ": graph JSON needs integer 'n' and array 'edges'");
    std::vector<Edge> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 3) fail(errc::schema_error, path + ": each edge must be [i, j, w]");
        edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
    }
    if (meta) {
        if (j.contains("seed")) meta->seed = j["seed"].get<std::uint64_t>();
        if (j.contains("model")) meta->model = j["model"].get<std::string>();
        if (j.contains("params")) meta->params_json = j["params"].dump();
    }
    try {
        return WeightedGraph(j["n"].get<int>(), std::move(edges));
    } catch (const Error& e) {
        fail(errc::schema_error, path + ": " + e.what());
    }
}

void write_edges_csv(const std::string& path, const WeightedGraph& g) {
    auto f = open_out(path);
    f << "i,j,w\n";
    for (const auto& e : g.edges) f << e.i << ',' << e.j << ',' << fmt17(e.w) << '\n';
}

WeightedGraph read_edges_csv(const std::string& path, int n) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line)) fail(errc::parse_error, path + ": empty edge file");
    std::vector<Edge> edges;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 3) fail(errc::parse_error, path + ":" + std::to_string(lineno) + ": expected i,j,w");
        edges.push_back({static_cast<int>(parse_double(trim(cells[0]), path, lineno)),
                         static_cast<int>(parse_double(trim(cells[1]), path, lineno)),
                         parse_double(trim(cells[2]), path, lineno)});
    }
    return WeightedGraph(n, std::move(edges));
}

void write_snapshots(const std::string& prefix, const SnapshotSet& s) {
    write_matrix_csv(prefix + ".csv", s.signals);
    json j;
    j["sigma2"] = s.sigma2;
    j["seed"] = s.provenance.seed;
    json filt;
    filt["kind"] = s.provenance.filter_kind;
    if (!s.provenance.rates.empty()) filt["rates"] = s.provenance.rates;
    if (!s.provenance.t_set.empty()) filt["t_set"] = s.provenance.t_set;
    j["filter"] = filt;
    json input;
    input["kind"] = s.provenance.input_kind;
    if (s.provenance.input_kind == "ar1") {
        input["a"] = s.provenance.ar_coeff;
        input["stride"] = s.provenance.stride;
    }
    if (s.provenance.input_kind == "wishart") input["d"] = s.provenance.wishart_d;
    j["input"] = input;
    if (!s.provenance.graph_id.empty()) j["graph"] = s.provenance.graph_id;
    auto f = open_out(prefix + ".json");
    f << j.dump(2) << '\n';
}

SnapshotSet read_snapshots(const std::string& prefix) {
    Eigen::MatrixXd sig = read_matrix_csv(prefix + ".csv");
    json j = load_json(prefix + ".json");
    if (!j.contains("sigma2")) fail(errc::schema_error, prefix + ".json: missing sigma2");
    Provenance prov;
    prov.seed = j.value("seed", 0ULL);
    if (j.contains("filter")) {
        const auto& filt = j["filter"];
        prov.filter_kind = filt.value("kind", "fixed");
        if (filt.contains("rates")) prov.rates = filt["rates"].get<std::vector<double>>();
        if (filt.contains("t_set")) prov.t_set = filt["t_set"].get<std::vector<int>>();
    }
    if (j.contains("input")) {
        const auto& input = j["input"];
        prov.input_kind = input.value("kind", "gaussian");
        prov.ar_coeff = input.value("a", 0.0);
        prov.stride = input.value("stride", 1);
        prov.wishart_d = input.value("d", 0);
    }
    prov.graph_id = j.value("graph", std::string{});
    return SnapshotSet(std::move(sig), j["sigma2"].get<double>(), std::move(prov));
}

void write_spectral_estimate(const std::string& prefix, const SpectralEstimate& est) {
    write_matrix_csv(prefix + "_L.csv", est.L_hat);
    json j;
    j["sigma2_hat"] = est.sigma2_hat;
    j["lambda_hat"] = std::vector<double>(est.lambda_hat.data(), est.lambda_hat.data() + est.lambda_hat.size());
    j["L_hat_csv"] = prefix + "_L.csv";
    auto f = open_out(prefix + ".json");
    f << j.dump(2) << '\n';
}

SpectralEstimate read_spectral_estimate(const std::string& prefix) {
    json j = load_json(prefix + ".json");
    if (!j.contains("sigma2_hat") || !j.contains("lambda_hat") || !j.contains("L_hat_csv"))
        fail(errc::schema_error, prefix + ".json: missing sigma2_hat/lambda_hat/L_hat_csv");
    SpectralEstimate est;
    est.sigma2_hat = j["sigma2_hat"].get<double>();
    auto lam = j["lambda_hat"].get<std::vector<double>>();
    est.lambda_hat = Eigen::Map<Eigen::VectorXd>(lam.data(), static_cast<Eigen::Index>(lam.size()));
    est.L_hat = read_matrix_csv(j["L_hat_csv"].get<std::string>());
    return est;
}

void write_solution(const std::string& prefix, const CglSolution& sol, double edge_threshold) {
    write_matrix_csv(prefix + "_L.csv", sol.L_star);
    {
        auto f = open_out(prefix + "_edges.csv");
        f << "i,j,weight\n";
        const auto n = sol.L_star.rows();
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (-sol.L_star(i, j) > edge_threshold)
                    f << i << ',' << j << ',' << fmt17(-sol.L_star(i, j)) << '\n';
    }
    json j;
    const auto& d = sol.diagnostics;
    j["iterations"] = d.iterations;
    j["outer_iterations"] = d.outer_iterations;
    j["objective"] = d.objective;
    j["kkt_residual"] = d.kkt_residual;
    j["residual"] = d.residual;
    j["converged"] = d.converged;
    j["monotone"] = d.monotone;
    if (d.epsilon_used >= 0.0) j["epsilon_used"] = d.epsilon_used;
    if (d.t_hat > 0) j["t_hat"] = d.t_hat;
    if (sol.gamma_star)
        j["gamma_star"] = std::vector<double>(sol.gamma_star->data(), sol.gamma_star->data() + sol.gamma_star->size());
    auto f = open_out(prefix + "_diagnostics.json");
    f << j.dump(2) << '\n';
}

std::string recovery_report_to_json(const RecoveryReport& rep) {
    json j;
    j["rel_error"] = rep.rel_error;
    j["f_score"] = rep.f_score;
    j["true_positives"] = rep.true_positives;
    j["false_positives"] = rep.false_positives;
    j["false_negatives"] = rep.false_negatives;
    j["trace_normalized"] = rep.trace_normalized;
    j["edge_threshold"] = rep.edge_threshold;
    return j.dump(2);
}

void write_recovery_report_json(const std::string& path, const RecoveryReport& rep) {
    auto f = open_out(path);
    f << recovery_report_to_json(rep) << '\n';
}

SnapshotSet ingest_matrix_csv(const std::string& path, double sigma2) {
    Eigen::MatrixXd m = read_matrix_csv(path);
    Provenance prov;
    prov.filter_kind = "unknown";
    prov.input_kind = "ingested";
    prov.graph_id = path;
    return SnapshotSet(std::move(m), sigma2, std::move(prov));
}

SnapshotSet ingest_roll_call_csv(const std::string& path, std::vector<std::string>* state_order) {
    auto f = open_in(path);
    std::string line;
    if (!std::getline(f, line)) fail(errc::parse_error, path + ": missing header row");
    auto header = split_csv_line(line);
    if (header.empty()) fail(errc::parse_error, path + ": empty header row");
    std::vector<std::string> states;          // distinct, in first-appearance order
    std::vector<int> col_state(header.size()); // column -> state index
    for (std::size_t c = 0; c < header.size(); ++c) {
        std::string code = trim(header[c]);
        if (code.empty()) fail(errc::parse_error, path + ": empty state code in header column " + std::to_string(c + 1));
        auto it = std::find(states.begin(), states.end(), code);
        if (it == states.end()) {
            states.push_back(code);
            col_state[c] = static_cast<int>(states.size()) - 1;
        } else {
            col_state[c] = static_cast<int>(it - states.begin());
        }
    }
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            fail(errc::parse_error, path + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                                        " vote cells, got " + std::to_string(cells.size()));
        std::vector<double> row(states.size(), 0.0);
        for (std::size_t c = 0; c < cells.size(); ++c) {
            std::string v = lower(trim(cells[c]));
            double val = 0.0; // anything but yea/nay counts as 0
            if (v == "yea") val = 1.0;
            else if (v == "nay") val = -1.0;
            row[col_state[c]] += val;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(errc::parse_error, path + ": no vote rows");
    Eigen::MatrixXd m(rows.size(), states.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < states.size(); ++j) m(i, j) = rows[i][j];
    if (state_order) *state_order = states;
    Provenance prov;
    prov.filter_kind = "unknown";
    prov.input_kind = "roll-call";
    prov.graph_id = path;
    return SnapshotSet(std::move(m), 0.0, std::move(prov));
}

} // namespace cglearn::io
