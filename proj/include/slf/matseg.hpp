#pragma once

// Per-vertex material labels from projected class probabilities and an MRF
// over mesh edges minimized with graph cuts.

#include "slf/geometry.hpp"

#include <Eigen/Core>
#include <memory>

namespace slf::matseg {

struct VertexProbabilities {
    int classes = 0;
    std::vector<Eigen::VectorXd> p;  ///< normalized per vertex
    std::vector<int> count;          ///< number of observations per vertex
};

struct MrfParams {
    double lambda_p = 1.0;
    double lambda_g = 1.0;
    double theta_p = 10.0;
    double eps = 0.01;

    void validate() const;
};

struct Segmentation {
    std::vector<int> labels;                ///< per vertex
    std::vector<std::vector<int>> members;  ///< per label
    double energy = 0;
    int sweeps = 0;
    /// False when the sweep cap was reached before a full sweep without improvement.
    bool converged = true;
};

/// One frame of per-pixel class probabilities (one image per class).
struct ProbabilityFrame {
    std::vector<ImageF> channels;
    Pose pose;  ///< camera-to-world
};

struct ProjectionOptions {
    /// A vertex counts as visible when its depth is within this distance of the rendered surface.
    double depth_tolerance = 0.01;
};

/// Running mean of the probability vectors seen at each visible vertex
/// projection; unobserved vertices get the uniform distribution.
VertexProbabilities project_probabilities(const std::vector<ProbabilityFrame>& frames, const TriangleMesh& mesh,
                                          const PinholeCamera& camera, const ProjectionOptions& options = {});

/// -log(p[y]) with p clamped below at 1e-8.
double unary(const Eigen::VectorXd& p, int y);

/// Indicator (N(m)-N(n)).(V(m)-V(n)) > 0.
int convexity(const TriangleMesh& mesh, int m, int n);

/// Disagreement cost of edge (m, n); zero when the labels agree.
double pairwise(int m, int n, int y_m, int y_n, const MrfParams& params, const TriangleMesh& mesh,
                const std::vector<Rgb>& colors);

/// Precomputed MRF over the mesh edges.
struct MrfGraph {
    std::vector<std::array<int, 2>> edges;
    std::vector<double> weights;  ///< cost of disagreement per edge
    std::vector<Eigen::VectorXd> unaries;

    static MrfGraph build(const VertexProbabilities& probs, const TriangleMesh& mesh, const std::vector<Rgb>& colors,
                          const MrfParams& params);
    double energy(const std::vector<int>& labels) const;
};

struct SolveOptions {
    int max_sweeps = 10;
};

/// Exact single cut for K = 2. For K >= 3, sweeps of alpha-expansion,
/// alpha-beta swap and exhaustive per-triangle relabeling until none lowers
/// the energy, started from the argmax labeling and from every constant
/// labeling; the best run is kept.
Segmentation solve(const VertexProbabilities& probs, const TriangleMesh& mesh, const std::vector<Rgb>& colors,
                   const MrfParams& params, const SolveOptions& options = {});
Segmentation solve(const MrfGraph& graph, int classes, const SolveOptions& options = {});

std::vector<int> argmax_labels(const VertexProbabilities& probs);
/// Majority label of each face's vertices (first vertex on a three-way tie).
std::vector<int> face_labels(const TriangleMesh& mesh, const std::vector<int>& vertex_labels);

/// Mean atlas color over a vertex's incident chart corners, ignoring
/// unobserved texels. `weight` may be empty.
std::vector<Rgb> vertex_colors_from_atlas(const TriangleMesh& mesh, const ImageRgb& atlas, const ImageF& weight);

// --- max-flow -----------------------------------------------------------------

/// Dinic max-flow on a directed graph with real capacities.
class MaxFlow {
public:
    explicit MaxFlow(int nodes);
    void add_edge(int from, int to, double capacity, double reverse_capacity = 0.0);
    double solve(int source, int sink);
    /// After solve: true when the node is reachable from the source in the residual graph.
    bool source_side(int node) const { return reach_[size_t(node)] != 0; }

private:
    struct Arc {
        int to;
        double cap;
    };
    bool bfs(int s, int t);
    double dfs(int u, int t, double pushed);

    int n_;
    std::vector<Arc> arcs_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> level_, next_;
    std::vector<std::uint8_t> reach_;
};

// --- probability providers ------------------------------------------------------

class ProbabilityProvider {
public:
    virtual ~ProbabilityProvider() = default;
    virtual int classes() const = 0;
    virtual ProbabilityFrame evaluate(const ImageRgb& rgb, const Pose& pose, int frame_index) const = 0;
};

/// Renders ground-truth labels and blends each pixel's one-hot vector with
/// a seeded random distribution: p = (1 - noise) onehot + noise u.
class OracleProvider : public ProbabilityProvider {
public:
    OracleProvider(const TriangleMesh& mesh, std::vector<int> vertex_labels, int classes, const PinholeCamera& camera,
                   double noise = 0.2, std::uint64_t seed = 1);
    int classes() const override { return classes_; }
    ProbabilityFrame evaluate(const ImageRgb& rgb, const Pose& pose, int frame_index) const override;

private:
    const TriangleMesh* mesh_;
    std::vector<int> face_labels_;
    int classes_;
    PinholeCamera camera_;
    double noise_;
    std::uint64_t seed_;
};

/// Soft k-means over per-vertex color and normal features.
VertexProbabilities kmeans_probabilities(const TriangleMesh& mesh, const std::vector<Rgb>& colors, int classes,
                                         std::uint64_t seed = 1, double normal_weight = 0.5, double temperature = 0.02);

}  // namespace slf::matseg
