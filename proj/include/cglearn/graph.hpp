#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cglearn {

struct Edge {
    int i = 0; // i < j always
    int j = 0;
    double w = 1.0;
};

// Undirected weighted graph; edges kept sorted by (i, j), no self-loops or
// duplicates, strictly positive weights. Validated at construction.
struct WeightedGraph {
    int n = 0;
    std::vector<Edge> edges;

    WeightedGraph() = default;
    WeightedGraph(int n_, std::vector<Edge> edges_);

    std::size_t edge_count() const { return edges.size(); }
};

struct CglReport {
    bool pass = true;
    double symmetry_violation = 0.0; // max |L_ij - L_ji|
    double offdiag_violation = 0.0;  // max(0, max_{i!=j} L_ij)
    double rowsum_violation = 0.0;   // max_i |sum_j L_ij|
    std::vector<std::string> violations;
};

CglReport validate_cgl(const Eigen::MatrixXd& m, double tol = 1e-9);

// Dense combinatorial graph Laplacian. Symmetry, nonpositive off-diagonals and
// zero row sums are checked on entry (tol_cgl); positive semidefiniteness then
// follows from diagonal dominance, so no eigensolve happens here. The
// eigendecomposition (ascending eigenvalues) is computed on first use and
// shared between copies; instances are immutable and safe to share across
// threads.
class Laplacian {
public:
    explicit Laplacian(Eigen::MatrixXd m, double tol_cgl = 1e-9);

    int n() const { return static_cast<int>(m_.rows()); }
    const Eigen::MatrixXd& matrix() const { return m_; }
    const Eigen::VectorXd& eigenvalues() const;  // ascending, first ~ 0
    const Eigen::MatrixXd& eigenvectors() const; // columns follow eigenvalues()
    double lambda_max() const;

private:
    struct EigCache;
    void ensure_eig() const;

    Eigen::MatrixXd m_;
    std::shared_ptr<EigCache> cache_;
};

struct Laplacian::EigCache {
    std::once_flag once;
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

Laplacian laplacian_of(const WeightedGraph& g);

bool connectivity_check(const WeightedGraph& g);

// Graph models. SBM defaults to two equal blocks; p_within connects nodes of
// the same block, p_across different blocks. Grid picks rows as the divisor of
// n closest to sqrt(n) unless rows/cols are given (rows * cols must equal n).
struct ErParams {
    int n = 0;
    double p = 0.0;
};
struct SbmParams {
    std::vector<int> block_sizes; // empty => two blocks of n/2
    int n = 0;                    // used when block_sizes is empty
    double p_within = 0.0;
    double p_across = 0.0;
};
struct WattsStrogatzParams {
    int n = 0;
    int k = 2; // even mean degree of the start lattice
    double p_rewire = 0.0;
};
struct BarabasiAlbertParams {
    int n = 0;
    int m_attach = 1;
};
struct GridParams {
    int n = 0;
    int rows = 0; // 0 => derived from n
    int cols = 0;
};

using GraphModel = std::variant<ErParams, SbmParams, WattsStrogatzParams, BarabasiAlbertParams, GridParams>;

struct WeightDist {
    enum class Kind { Unit, Uniform } kind = Kind::Unit;
    double lo = 0.0;
    double hi = 1.0;

    static WeightDist unit() { return {}; }
    static WeightDist uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
};

// Same (model, weights, seed) always yields the same edge list. Structure and
// weight draws use separate streams so switching weight distributions leaves
// the topology unchanged.
WeightedGraph generate_graph(const GraphModel& model, const WeightDist& weights, std::uint64_t seed);

// Resamples (new derived seed per attempt) until the graph is connected and
// the minimum gap between consecutive Laplacian eigenvalues reaches gap_min.
WeightedGraph generate_connected(const GraphModel& model, const WeightDist& weights, std::uint64_t seed,
                                 double gap_min = 1e-4, int max_tries = 20000);

const char* model_name(const GraphModel& model);

} // namespace cglearn
