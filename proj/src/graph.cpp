#include "cglearn/graph.hpp"

#include "cglearn/errors.hpp"
#include "cglearn/rng.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace cglearn {

WeightedGraph::WeightedGraph(int n_, std::vector<Edge> edges_) : n(n_), edges(std::move(edges_)) {
    if (n <= 0) fail(errc::invalid_params, "graph needs n >= 1, got " + std::to_string(n));
    for (auto& e : edges) {
        if (e.i == e.j) fail(errc::invalid_params, "self-loop at node " + std::to_string(e.i));
        if (e.i > e.j) std::swap(e.i, e.j);
        if (e.i < 0 || e.j >= n) fail(errc::invalid_params, "edge endpoint out of range");
        if (!(e.w > 0.0) || !std::isfinite(e.w)) fail(errc::invalid_params, "edge weight must be finite and > 0");
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < edges.size(); ++k)
        if (edges[k].i == edges[k - 1].i && edges[k].j == edges[k - 1].j)
            fail(errc::invalid_params, "duplicate edge (" + std::to_string(edges[k].i) + "," + std::to_string(edges[k].j) + ")");
}

CglReport validate_cgl(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) fail(errc::not_square, "matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (!m.allFinite()) fail(errc::non_finite, "matrix has non-finite entries");
    CglReport r;
    const auto n = m.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        double rowsum = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            rowsum += m(i, j);
            if (j > i) r.symmetry_violation = std::max(r.symmetry_violation, std::abs(m(i, j) - m(j, i)));
            if (j != i) r.offdiag_violation = std::max(r.offdiag_violation, m(i, j));
        }
        r.rowsum_violation = std::max(r.rowsum_violation, std::abs(rowsum));
    }
    r.offdiag_violation = std::max(0.0, r.offdiag_violation);
    if (r.symmetry_violation > tol) r.violations.push_back("symmetry");
    if (r.offdiag_violation > tol) r.violations.push_back("nonpositive off-diagonal");
    if (r.rowsum_violation > tol) r.violations.push_back("zero row sums");
    r.pass = r.violations.empty();
    return r;
}

Laplacian::Laplacian(Eigen::MatrixXd m, double tol_cgl) : m_(std::move(m)), cache_(std::make_shared<EigCache>()) {
    auto report = validate_cgl(m_, tol_cgl);
    if (!report.pass) {
        std::string what = "not a CGL within " + std::to_string(tol_cgl) + ":";
        for (const auto& v : report.violations) what += " " + v;
        fail(errc::invalid_params, what);
    }
    // exact symmetry downstream regardless of tol-level noise
    m_ = ((m_ + m_.transpose()) * 0.5).eval();
}

void Laplacian::ensure_eig() const {
    std::call_once(cache_->once, [this] {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_);
        if (es.info() != Eigen::Success) fail(errc::numeric_failure, "eigendecomposition did not converge");
        cache_->values = es.eigenvalues();   // ascending
        cache_->vectors = es.eigenvectors();
    });
}

const Eigen::VectorXd& Laplacian::eigenvalues() const {
    ensure_eig();
    return cache_->values;
}

const Eigen::MatrixXd& Laplacian::eigenvectors() const {
    ensure_eig();
    return cache_->vectors;
}

double Laplacian::lambda_max() const {
    return eigenvalues()(n() - 1);
}

Laplacian laplacian_of(const WeightedGraph& g) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(g.n, g.n);
    for (const auto& e : g.edges) {
        L(e.i, e.j) -= e.w;
        L(e.j, e.i) -= e.w;
        L(e.i, e.i) += e.w;
        L(e.j, e.j) += e.w;
    }
    return Laplacian(std::move(L));
}

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

bool connectivity_check(const WeightedGraph& g) {
    if (g.n <= 1) return true;
    UnionFind uf(g.n);
    for (const auto& e : g.edges) uf.unite(e.i, e.j);
    int root = uf.find(0);
    for (int v = 1; v < g.n; ++v)
        if (uf.find(v) != root) return false;
    return true;
}

namespace {

double draw_weight(const WeightDist& wd, Stream& ws) {
    if (wd.kind == WeightDist::Kind::Unit) return 1.0;
    if (!(wd.lo > 0.0) || !(wd.hi >= wd.lo))
        fail(errc::invalid_params, "uniform weights need 0 < lo <= hi");
    return ws.uniform(wd.lo, wd.hi);
}

WeightedGraph gen_er(const ErParams& p, const WeightDist& wd, std::uint64_t seed) {
    if (p.n <= 0 || p.p < 0.0 || p.p > 1.0) fail(errc::invalid_params, "er needs n >= 1 and p in [0,1]");
    Stream structure(mix_seed(seed, 0));
    Stream weights(mix_seed(seed, 1));
    std::vector<Edge> edges;
    for (int i = 0; i < p.n; ++i)
        for (int j = i + 1; j < p.n; ++j)
            if (structure.uniform01() < p.p) edges.push_back({i, j, draw_weight(wd, weights)});
    return WeightedGraph(p.n, std::move(edges));
}

WeightedGraph gen_sbm(const SbmParams& p, const WeightDist& wd, std::uint64_t seed) {
    std::vector<int> sizes = p.block_sizes;
    if (sizes.empty()) {
        if (p.n < 2) fail(errc::invalid_params, "sbm default blocks need n >= 2");
        sizes = {p.n / 2, p.n - p.n / 2};
    }
    int n = std::accumulate(sizes.begin(), sizes.end(), 0);
    if (n <= 0) fail(errc::invalid_params, "sbm blocks must sum to n >= 1");
    for (int s : sizes)
        if (s <= 0) fail(errc::invalid_params, "sbm block sizes must be positive");
    if (p.p_within < 0 || p.p_within > 1 || p.p_across < 0 || p.p_across > 1)
        fail(errc::invalid_params, "sbm probabilities must lie in [0,1]");
    std::vector<int> block(n);
    int v = 0;
    for (std::size_t b = 0; b < sizes.size(); ++b)
        for (int k = 0; k < sizes[b]; ++k) block[v++] = static_cast<int>(b);
    Stream structure(mix_seed(seed, 0));
    Stream weights(mix_seed(seed, 1));
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double prob = block[i] == block[j] ? p.p_within : p.p_across;
            if (structure.uniform01() < prob) edges.push_back({i, j, draw_weight(wd, weights)});
        }
    return WeightedGraph(n, std::move(edges));
}

WeightedGraph gen_ws(const WattsStrogatzParams& p, const WeightDist& wd, std::uint64_t seed) {
    if (p.n <= 0 || p.k <= 0 || p.k % 2 != 0 || p.k >= p.n)
        fail(errc::invalid_params, "watts-strogatz needs even k with 0 < k < n");
    if (p.p_rewire < 0 || p.p_rewire > 1) fail(errc::invalid_params, "rewire probability must lie in [0,1]");
    Stream structure(mix_seed(seed, 0));
    Stream weights(mix_seed(seed, 1));
    // ring lattice: each node linked to k/2 clockwise neighbours
    std::vector<std::vector<char>> adj(p.n, std::vector<char>(p.n, 0));
    std::vector<std::pair<int, int>> ring;
    for (int i = 0; i < p.n; ++i)
        for (int d = 1; d <= p.k / 2; ++d) {
            int j = (i + d) % p.n;
            ring.emplace_back(i, j);
            adj[std::min(i, j)][std::max(i, j)] = 1;
        }
    for (auto& [i, j] : ring) {
        if (structure.uniform01() >= p.p_rewire) continue;
        // rewire the far endpoint to a uniform non-neighbour of i
        int tries = 0;
        while (tries++ < 4 * p.n) {
            int t = static_cast<int>(structure.integer(static_cast<std::uint64_t>(p.n)));
            if (t == i || t == j) continue;
            int a = std::min(i, t), b = std::max(i, t);
            if (adj[a][b]) continue;
            adj[std::min(i, j)][std::max(i, j)] = 0;
            adj[a][b] = 1;
            j = t;
            break;
        }
    }
    std::vector<Edge> edges;
    for (int i = 0; i < p.n; ++i)
        for (int j = i + 1; j < p.n; ++j)
            if (adj[i][j]) edges.push_back({i, j, draw_weight(wd, weights)});
    return WeightedGraph(p.n, std::move(edges));
}

WeightedGraph gen_ba(const BarabasiAlbertParams& p, const WeightDist& wd, std::uint64_t seed) {
    if (p.m_attach <= 0 || p.n <= p.m_attach)
        fail(errc::invalid_params, "barabasi-albert needs 0 < m_attach < n");
    Stream structure(mix_seed(seed, 0));
    Stream weights(mix_seed(seed, 1));
    std::vector<std::pair<int, int>> pairs;
    // seed clique on m_attach + 1 nodes, then degree-proportional attachment via
    // uniform sampling of edge endpoints
    int m0 = p.m_attach + 1;
    std::vector<int> endpoints;
    for (int i = 0; i < m0; ++i)
        for (int j = i + 1; j < m0; ++j) {
            pairs.emplace_back(i, j);
            endpoints.push_back(i);
            endpoints.push_back(j);
        }
    for (int v = m0; v < p.n; ++v) {
        std::vector<int> targets;
        int guard = 0;
        while (static_cast<int>(targets.size()) < p.m_attach && guard++ < 100 * p.n) {
            int t = endpoints[structure.integer(endpoints.size())];
            if (std::find(targets.begin(), targets.end(), t) == targets.end()) targets.push_back(t);
        }
        for (int t : targets) {
            pairs.emplace_back(std::min(v, t), std::max(v, t));
            endpoints.push_back(v);
            endpoints.push_back(t);
        }
    }
    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (auto [i, j] : pairs) edges.push_back({i, j, draw_weight(wd, weights)});
    return WeightedGraph(p.n, std::move(edges));
}

WeightedGraph gen_grid(const GridParams& p, const WeightDist& wd, std::uint64_t seed) {
    int rows = p.rows, cols = p.cols;
    if (rows > 0 && cols > 0) {
        if (p.n > 0 && rows * cols != p.n) fail(errc::invalid_params, "grid rows*cols must equal n");
    } else {
        if (p.n <= 0) fail(errc::invalid_params, "grid needs n or rows/cols");
        rows = 1;
        for (int r = 1; r * r <= p.n; ++r)
            if (p.n % r == 0) rows = r; // divisor closest to sqrt(n) from below
        cols = p.n / rows;
    }
    int n = rows * cols;
    Stream weights(mix_seed(seed, 1));
    auto id = [cols](int r, int c) { return r * cols + c; };
    std::vector<Edge> edges;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1), draw_weight(wd, weights)});
            if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c), draw_weight(wd, weights)});
        }
    return WeightedGraph(n, std::move(edges));
}

} // namespace

WeightedGraph generate_graph(const GraphModel& model, const WeightDist& weights, std::uint64_t seed) {
    return std::visit(
        [&](const auto& p) -> WeightedGraph {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ErParams>) return gen_er(p, weights, seed);
            else if constexpr (std::is_same_v<T, SbmParams>) return gen_sbm(p, weights, seed);
            else if constexpr (std::is_same_v<T, WattsStrogatzParams>) return gen_ws(p, weights, seed);
            else if constexpr (std::is_same_v<T, BarabasiAlbertParams>) return gen_ba(p, weights, seed);
            else return gen_grid(p, weights, seed);
        },
        model);
}

WeightedGraph generate_connected(const GraphModel& model, const WeightDist& weights, std::uint64_t seed,
                                 double gap_min, int max_tries) {
    for (int t = 0; t < max_tries; ++t) {
        WeightedGraph g = generate_graph(model, weights, t == 0 ? seed : mix_seed(seed, 0x67617073ULL, t));
        if (!connectivity_check(g)) continue;
        Laplacian L = laplacian_of(g);
        const auto& ev = L.eigenvalues();
        double gap = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 1; i < ev.size(); ++i) gap = std::min(gap, ev(i) - ev(i - 1));
        if (ev.size() < 2 || gap >= gap_min) return g;
    }
    fail(errc::infeasible, "no connected graph with eigengap >= " + std::to_string(gap_min) + " after " +
                               std::to_string(max_tries) + " tries");
}

const char* model_name(const GraphModel& model) {
    struct V {
        const char* operator()(const ErParams&) const { return "er"; }
        const char* operator()(const SbmParams&) const { return "sbm"; }
        const char* operator()(const WattsStrogatzParams&) const { return "watts-strogatz"; }
        const char* operator()(const BarabasiAlbertParams&) const { return "barabasi-albert"; }
        const char* operator()(const GridParams&) const { return "grid"; }
    };
    return std::visit(V{}, model);
}

} // namespace cglearn
