#include "slf/matseg.hpp"

#include "slf/raster.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <random>

namespace slf::matseg {

void MrfParams::validate() const {
    if (!(lambda_p >= 0 && lambda_g >= 0 && theta_p >= 0)) throw std::invalid_argument("MRF weights must be >= 0");
    if (!(eps > 0)) throw std::invalid_argument("MRF epsilon must be positive");
}

// --- probabilities ----------------------------------------------------------------

VertexProbabilities project_probabilities(const std::vector<ProbabilityFrame>& frames, const TriangleMesh& mesh,
                                          const PinholeCamera& camera, const ProjectionOptions& options) {
    const size_t V = mesh.vertices.size();
    int K = 0;
    for (const auto& f : frames) {
        if (K == 0) K = int(f.channels.size());
        if (int(f.channels.size()) != K || K == 0) throw std::invalid_argument("frames disagree on the class count");
        for (const auto& c : f.channels)
            if (!c.same_size(camera.width, camera.height)) throw std::invalid_argument("probability image size");
    }
    VertexProbabilities out;
    out.classes = std::max(K, 1);
    out.count.assign(V, 0);
    if (frames.empty()) {
        out.p.assign(V, Eigen::VectorXd::Constant(out.classes, 1.0 / out.classes));
        return out;
    }

    struct Partial {
        std::vector<double> sum;
        std::vector<int> count;
    };
    std::vector<Partial> partial(frames.size());
    parallel_for(int(frames.size()), 1, [&](int b, int e) {
        for (int fi = b; fi < e; ++fi) {
            const auto& fr = frames[size_t(fi)];
            Partial& part = partial[size_t(fi)];
            part.sum.assign(V * size_t(K), 0.0);
            part.count.assign(V, 0);
            const SurfaceMap map = rasterize(mesh, camera, fr.pose);
            const Pose world_to_cam = fr.pose.inverse();
            for (size_t v = 0; v < V; ++v) {
                const Vec3 pc = world_to_cam * mesh.vertices[v];
                const auto px = project(camera, pc);
                if (!px) continue;
                // nearest pixel first; silhouette vertices fall back to a covered neighbour
                const int cx = int(std::lround(px->x())), cy = int(std::lround(px->y()));
                int x = -1, y = -1;
                double best = options.depth_tolerance;
                for (int r = 0; r < 9 && x < 0; ++r) {
                    const int xx = cx + (r == 0 ? 0 : (r - 1) % 3 - 1), yy = cy + (r == 0 ? 0 : (r - 1) / 3 - 1);
                    if (!map.depth.contains(xx, yy) || map.depth(xx, yy) <= 0) continue;
                    const double dz = std::abs(map.depth(xx, yy) - pc.z());
                    if (dz <= best) best = dz, x = xx, y = yy;
                }
                if (x < 0) continue;
                for (int k = 0; k < K; ++k) part.sum[v * size_t(K) + size_t(k)] += fr.channels[size_t(k)](x, y);
                ++part.count[v];
            }
        }
    });

    std::vector<double> sum(V * size_t(K), 0.0);
    for (const auto& part : partial) {
        for (size_t i = 0; i < sum.size(); ++i) sum[i] += part.sum[i];
        for (size_t v = 0; v < V; ++v) out.count[v] += part.count[v];
    }
    out.p.resize(V);
    for (size_t v = 0; v < V; ++v) {
        Eigen::VectorXd p(K);
        for (int k = 0; k < K; ++k) p[k] = std::max(0.0, sum[v * size_t(K) + size_t(k)]);
        const double s = p.sum();
        out.p[v] = (out.count[v] > 0 && s > 0) ? Eigen::VectorXd(p / s) : Eigen::VectorXd::Constant(K, 1.0 / K);
    }
    return out;
}

double unary(const Eigen::VectorXd& p, int y) { return -std::log(std::max(p[y], 1e-8)); }

int convexity(const TriangleMesh& mesh, int m, int n) {
    const Vec3 dn = mesh.normals[size_t(m)] - mesh.normals[size_t(n)];
    const Vec3 dv = mesh.vertices[size_t(m)] - mesh.vertices[size_t(n)];
    return dn.dot(dv) > 0 ? 1 : 0;
}

namespace {
double edge_weight(int m, int n, const MrfParams& params, const TriangleMesh& mesh, const std::vector<Rgb>& colors) {
    const double dc = colors.empty() ? 0.0 : double((colors[size_t(m)] - colors[size_t(n)]).squaredNorm());
    const double dn = std::max((mesh.normals[size_t(m)] - mesh.normals[size_t(n)]).squaredNorm(), 1e-6);
    return params.lambda_p * std::exp(-params.theta_p * dc) + params.lambda_g * (convexity(mesh, m, n) + params.eps) / dn;
}
}  // namespace

double pairwise(int m, int n, int y_m, int y_n, const MrfParams& params, const TriangleMesh& mesh,
                const std::vector<Rgb>& colors) {
    if (y_m == y_n) return 0.0;
    return edge_weight(m, n, params, mesh, colors);
}

MrfGraph MrfGraph::build(const VertexProbabilities& probs, const TriangleMesh& mesh, const std::vector<Rgb>& colors,
                         const MrfParams& params) {
    params.validate();
    if (probs.p.size() != mesh.vertices.size()) throw std::invalid_argument("probabilities do not match the mesh");
    if (!colors.empty() && colors.size() != mesh.vertices.size())
        throw std::invalid_argument("vertex colors do not match the mesh");
    MrfGraph g;
    g.edges = mesh_edges(mesh);
    g.weights.reserve(g.edges.size());
    for (const auto& e : g.edges) g.weights.push_back(edge_weight(e[0], e[1], params, mesh, colors));
    g.unaries.resize(probs.p.size());
    for (size_t v = 0; v < probs.p.size(); ++v) {
        g.unaries[v].resize(probs.classes);
        for (int k = 0; k < probs.classes; ++k) g.unaries[v][k] = unary(probs.p[v], k);
    }
    return g;
}

double MrfGraph::energy(const std::vector<int>& labels) const {
    double e = 0;
    for (size_t v = 0; v < unaries.size(); ++v) e += unaries[v][labels[v]];
    for (size_t i = 0; i < edges.size(); ++i)
        if (labels[size_t(edges[i][0])] != labels[size_t(edges[i][1])]) e += weights[i];
    return e;
}

std::vector<int> argmax_labels(const VertexProbabilities& probs) {
    std::vector<int> out(probs.p.size());
    for (size_t v = 0; v < probs.p.size(); ++v) {
        int k = 0;
        probs.p[v].maxCoeff(&k);
        out[v] = k;
    }
    return out;
}

std::vector<int> face_labels(const TriangleMesh& mesh, const std::vector<int>& vl) {
    std::vector<int> out(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        const int a = vl[size_t(t[0])], b = vl[size_t(t[1])], c = vl[size_t(t[2])];
        out[f] = (b == c) ? b : a;
    }
    return out;
}

std::vector<Rgb> vertex_colors_from_atlas(const TriangleMesh& mesh, const ImageRgb& atlas, const ImageF& weight) {
    if (mesh.uv_charts.size() != mesh.faces.size()) throw std::invalid_argument("mesh has no atlas parameterization");
    std::vector<Rgb> sum(mesh.vertices.size(), Rgb::Zero());
    std::vector<float> wsum(mesh.vertices.size(), 0.0f);
    const int size = atlas.width;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        for (int k = 0; k < 3; ++k) {
            const Vec2 t = mesh.uv_charts[f][size_t(k)] * size - Vec2(0.5, 0.5);
            const int x0 = int(std::floor(t.x())), y0 = int(std::floor(t.y()));
            const double ax = t.x() - x0, ay = t.y() - y0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int x = x0 + dx, y = y0 + dy;
                    if (!atlas.contains(x, y)) continue;
                    if (!weight.empty() && weight(x, y) <= 0) continue;
                    const auto w = float((dx ? ax : 1 - ax) * (dy ? ay : 1 - ay));
                    sum[size_t(mesh.faces[f][size_t(k)])] += atlas(x, y) * w;
                    wsum[size_t(mesh.faces[f][size_t(k)])] += w;
                }
        }
    }
    for (size_t v = 0; v < sum.size(); ++v) sum[v] = wsum[v] > 0 ? Rgb(sum[v] / wsum[v]) : Rgb::Zero();
    return sum;
}

// --- max-flow -----------------------------------------------------------------------

MaxFlow::MaxFlow(int nodes) : n_(nodes), adj_(size_t(nodes)) {}

void MaxFlow::add_edge(int from, int to, double cap, double rcap) {
    adj_[size_t(from)].push_back(int(arcs_.size()));
    arcs_.push_back({to, std::max(cap, 0.0)});
    adj_[size_t(to)].push_back(int(arcs_.size()));
    arcs_.push_back({from, std::max(rcap, 0.0)});
}

namespace {
constexpr double kFlowEps = 1e-12;
}

bool MaxFlow::bfs(int s, int t) {
    level_.assign(size_t(n_), -1);
    std::queue<int> q;
    level_[size_t(s)] = 0;
    q.push(s);
    while (!q.empty()) {
        const int u = q.front();
        q.pop();
        for (int a : adj_[size_t(u)]) {
            const Arc& arc = arcs_[size_t(a)];
            if (arc.cap > kFlowEps && level_[size_t(arc.to)] < 0) {
                level_[size_t(arc.to)] = level_[size_t(u)] + 1;
                q.push(arc.to);
            }
        }
    }
    return level_[size_t(t)] >= 0;
}

double MaxFlow::dfs(int u, int t, double pushed) {
    if (u == t) return pushed;
    for (int& i = next_[size_t(u)]; i < int(adj_[size_t(u)].size()); ++i) {
        const int a = adj_[size_t(u)][size_t(i)];
        Arc& arc = arcs_[size_t(a)];
        if (arc.cap <= kFlowEps || level_[size_t(arc.to)] != level_[size_t(u)] + 1) continue;
        const double got = dfs(arc.to, t, std::min(pushed, arc.cap));
        if (got > 0) {
            arc.cap -= got;
            arcs_[size_t(a ^ 1)].cap += got;
            return got;
        }
    }
    return 0.0;
}

double MaxFlow::solve(int s, int t) {
    double flow = 0;
    while (bfs(s, t)) {
        next_.assign(size_t(n_), 0);
        while (const double f = dfs(s, t, std::numeric_limits<double>::infinity())) flow += f;
    }
    // residual reachability defines the source side of the minimum cut
    reach_.assign(size_t(n_), 0);
    std::vector<int> stack{s};
    reach_[size_t(s)] = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int a : adj_[size_t(u)]) {
            const Arc& arc = arcs_[size_t(a)];
            if (arc.cap > kFlowEps && !reach_[size_t(arc.to)]) {
                reach_[size_t(arc.to)] = 1;
                stack.push_back(arc.to);
            }
        }
    }
    return flow;
}

// --- solvers ---------------------------------------------------------------------------

namespace {

Segmentation finish(const MrfGraph& g, std::vector<int> labels, int K, int sweeps, bool converged) {
    Segmentation s;
    s.energy = g.energy(labels);
    s.members.assign(size_t(K), {});
    for (size_t v = 0; v < labels.size(); ++v) s.members[size_t(labels[v])].push_back(int(v));
    s.labels = std::move(labels);
    s.sweeps = sweeps;
    s.converged = converged;
    return s;
}

/// Binary energy sum_i lin_i x_i + sum_(i,j) cap_ij [x_i = 0][x_j = 1] (+ const)
/// minimized by one cut; x = 0 on the source side.
struct BinaryCut {
    std::vector<double> lin;
    std::vector<std::array<double, 2>> pair_caps;  ///< i->j and j->i, parallel to edges

    std::vector<int> solve(const std::vector<std::array<int, 2>>& edges) const {
        const int n = int(lin.size()), s = n, t = n + 1;
        MaxFlow flow(n + 2);
        for (int i = 0; i < n; ++i) {
            if (lin[size_t(i)] > 0)
                flow.add_edge(s, i, lin[size_t(i)]);
            else if (lin[size_t(i)] < 0)
                flow.add_edge(i, t, -lin[size_t(i)]);
        }
        for (size_t e = 0; e < edges.size(); ++e)
            if (pair_caps[e][0] > 0 || pair_caps[e][1] > 0)
                flow.add_edge(edges[e][0], edges[e][1], pair_caps[e][0], pair_caps[e][1]);
        flow.solve(s, t);
        std::vector<int> x(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) x[size_t(i)] = flow.source_side(i) ? 0 : 1;
        return x;
    }
};

}  // namespace

Segmentation solve(const MrfGraph& g, int K, const SolveOptions& options) {
    const size_t V = g.unaries.size();
    if (K < 1) throw std::invalid_argument("need at least one class");
    if (K == 1) return finish(g, std::vector<int>(V, 0), 1, 0, true);

    std::vector<int> labels(V);
    // start from the unary optimum (the argmax of the probabilities)
    for (size_t v = 0; v < V; ++v) g.unaries[v].minCoeff(&labels[v]);

    if (K == 2) {
        // Potts disagreement costs are submodular, so one cut is the global optimum.
        BinaryCut cut;
        cut.lin.resize(V);
        for (size_t v = 0; v < V; ++v) cut.lin[v] = g.unaries[v][1] - g.unaries[v][0];
        cut.pair_caps.resize(g.edges.size());
        for (size_t e = 0; e < g.edges.size(); ++e) cut.pair_caps[e] = {g.weights[e], g.weights[e]};
        return finish(g, cut.solve(g.edges), 2, 1, true);
    }

    // Expansion and swap moves from several starts: the argmax labeling and
    // every constant labeling. Each run descends until no move helps; the
    // lowest energy wins.
    struct Run {
        std::vector<int> labels;
        int sweeps = 0;
        bool converged = false;
    };
    // weighted adjacency and the 3-cliques of the edge graph (mesh triangles)
    std::vector<std::vector<std::pair<int, double>>> adj(V);
    for (size_t e = 0; e < g.edges.size(); ++e) {
        adj[size_t(g.edges[e][0])].push_back({g.edges[e][1], g.weights[e]});
        adj[size_t(g.edges[e][1])].push_back({g.edges[e][0], g.weights[e]});
    }
    std::vector<std::array<int, 3>> triangles;
    {
        std::vector<std::vector<int>> up(V);
        for (const auto& e : g.edges) up[size_t(std::min(e[0], e[1]))].push_back(std::max(e[0], e[1]));
        for (auto& u : up) {
            std::sort(u.begin(), u.end());
            u.erase(std::unique(u.begin(), u.end()), u.end());
        }
        for (size_t a = 0; a < V; ++a)
            for (int b : up[a])
                for (int c : up[size_t(b)])
                    if (std::binary_search(up[a].begin(), up[a].end(), c)) triangles.push_back({int(a), b, c});
    }
    // energy terms touching the three vertices, each edge once
    auto block_energy = [&](const std::vector<int>& labels, const std::array<int, 3>& t) {
        double e = 0;
        for (int q = 0; q < 3; ++q) {
            const int v = t[size_t(q)];
            e += g.unaries[size_t(v)][labels[size_t(v)]];
            for (const auto& [n, w] : adj[size_t(v)]) {
                if ((q >= 1 && n == t[0]) || (q == 2 && n == t[1])) continue;
                if (labels[size_t(n)] != labels[size_t(v)]) e += w;
            }
        }
        return e;
    };

    auto descend = [&](std::vector<int> labels) {
        double energy = g.energy(labels);
        auto accept = [&](std::vector<int>& candidate) {
            const double e = g.energy(candidate);
            if (e < energy - 1e-12 * std::max(1.0, std::abs(energy))) {
                labels = std::move(candidate);
                energy = e;
                return true;
            }
            return false;
        };
        int sweeps = 0;
        bool converged = false;
        while (sweeps < options.max_sweeps) {
            ++sweeps;
            bool improved = false;
            for (int alpha = 0; alpha < K; ++alpha) {
                // x_i = 1 moves vertex i to alpha
                BinaryCut cut;
                cut.lin.assign(V, 0.0);
                for (size_t v = 0; v < V; ++v) cut.lin[v] = g.unaries[v][alpha] - g.unaries[v][labels[v]];
                cut.pair_caps.assign(g.edges.size(), {0.0, 0.0});
                for (size_t e = 0; e < g.edges.size(); ++e) {
                    const int i = g.edges[e][0], j = g.edges[e][1];
                    const int a = labels[size_t(i)], b = labels[size_t(j)];
                    const double w = g.weights[e];
                    const double A = a != b ? w : 0.0;      // keep, keep
                    const double B = a != alpha ? w : 0.0;  // keep, move
                    const double C = alpha != b ? w : 0.0;  // move, keep
                    // D (move, move) is zero
                    cut.lin[size_t(i)] += C - A;
                    cut.lin[size_t(j)] += -C;
                    cut.pair_caps[e][0] = std::max(0.0, B + C - A);
                }
                const auto x = cut.solve(g.edges);
                std::vector<int> candidate = labels;
                for (size_t v = 0; v < V; ++v)
                    if (x[v]) candidate[v] = alpha;
                improved |= accept(candidate);
            }
            // alpha-beta swaps escape some expansion minima
            for (int alpha = 0; alpha < K; ++alpha)
                for (int beta = alpha + 1; beta < K; ++beta) {
                    // among vertices labelled alpha or beta, x_i = 1 means beta
                    BinaryCut cut;
                    cut.lin.assign(V, 0.0);
                    cut.pair_caps.assign(g.edges.size(), {0.0, 0.0});
                    auto in = [&](int v) { return labels[size_t(v)] == alpha || labels[size_t(v)] == beta; };
                    for (size_t v = 0; v < V; ++v)
                        if (in(int(v))) cut.lin[v] = g.unaries[v][beta] - g.unaries[v][alpha];
                    for (size_t e = 0; e < g.edges.size(); ++e) {
                        const int i = g.edges[e][0], j = g.edges[e][1];
                        const double w = g.weights[e];
                        if (in(i) && in(j)) {
                            cut.pair_caps[e] = {w, w};
                        } else if (in(i) != in(j)) {
                            const int inner = in(i) ? i : j, c = labels[size_t(in(i) ? j : i)];
                            if (c == alpha) cut.lin[size_t(inner)] += w;
                            if (c == beta) cut.lin[size_t(inner)] -= w;
                        }
                    }
                    const auto x = cut.solve(g.edges);
                    std::vector<int> candidate = labels;
                    for (size_t v = 0; v < V; ++v)
                        if (in(int(v))) candidate[v] = x[v] ? beta : alpha;
                    improved |= accept(candidate);
                }
            // exhaustive relabeling of each triangle with the rest held fixed
            bool block_moved = false;
            for (const auto& t : triangles) {
                const std::array<int, 3> keep{labels[size_t(t[0])], labels[size_t(t[1])], labels[size_t(t[2])]};
                double best_e = block_energy(labels, t);
                const double tol = 1e-12 * std::max(1.0, std::abs(best_e));
                std::array<int, 3> best_l = keep;
                for (int a = 0; a < K; ++a)
                    for (int b = 0; b < K; ++b)
                        for (int c = 0; c < K; ++c) {
                            labels[size_t(t[0])] = a;
                            labels[size_t(t[1])] = b;
                            labels[size_t(t[2])] = c;
                            const double e = block_energy(labels, t);
                            if (e < best_e - tol) best_e = e, best_l = {a, b, c};
                        }
                for (int q = 0; q < 3; ++q) labels[size_t(t[size_t(q)])] = best_l[size_t(q)];
                block_moved |= best_l != keep;
            }
            if (block_moved) {
                energy = g.energy(labels);
                improved = true;
            }
            if (!improved) {
                converged = true;
                break;
            }
        }
        return Run{std::move(labels), sweeps, converged};
    };
    Run best = descend(labels);
    double best_energy = g.energy(best.labels);
    for (int k = 0; k < K; ++k) {
        Run r = descend(std::vector<int>(V, k));
        const double e = g.energy(r.labels);
        if (e < best_energy - 1e-12 * std::max(1.0, std::abs(best_energy))) {
            best = std::move(r);
            best_energy = e;
        }
    }
    return finish(g, std::move(best.labels), K, best.sweeps, best.converged);
}

Segmentation solve(const VertexProbabilities& probs, const TriangleMesh& mesh, const std::vector<Rgb>& colors,
                   const MrfParams& params, const SolveOptions& options) {
    return solve(MrfGraph::build(probs, mesh, colors, params), probs.classes, options);
}

// --- providers ---------------------------------------------------------------------------

namespace {
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

OracleProvider::OracleProvider(const TriangleMesh& mesh, std::vector<int> vertex_labels, int classes,
                               const PinholeCamera& camera, double noise, std::uint64_t seed)
    : mesh_(&mesh),
      face_labels_(face_labels(mesh, vertex_labels)),
      classes_(classes),
      camera_(camera),
      noise_(std::clamp(noise, 0.0, 1.0)),
      seed_(seed) {
    for (int l : vertex_labels)
        if (l < 0 || l >= classes) throw std::invalid_argument("oracle label out of range");
}

ProbabilityFrame OracleProvider::evaluate(const ImageRgb&, const Pose& pose, int frame_index) const {
    const SurfaceMap map = rasterize(*mesh_, camera_, pose);
    ProbabilityFrame out;
    out.pose = pose;
    out.channels.assign(size_t(classes_), ImageF(camera_.width, camera_.height, 1.0f / float(classes_)));
    const std::uint64_t base = mix64(seed_ ^ mix64(std::uint64_t(frame_index)));
    std::vector<double> u(static_cast<size_t>(classes_));
    for (int y = 0; y < camera_.height; ++y)
        for (int x = 0; x < camera_.width; ++x) {
            const int f = map.face(x, y);
            if (f < 0) continue;
            double s = 0;
            std::uint64_t h = mix64(base ^ std::uint64_t(y * camera_.width + x));
            for (auto& v : u) {
                h = mix64(h);
                v = double(h >> 11) * (1.0 / 9007199254740992.0) + 1e-12;
                s += v;
            }
            for (int k = 0; k < classes_; ++k)
                out.channels[size_t(k)](x, y) =
                    float((1.0 - noise_) * (k == face_labels_[size_t(f)] ? 1.0 : 0.0) + noise_ * u[size_t(k)] / s);
        }
    return out;
}

VertexProbabilities kmeans_probabilities(const TriangleMesh& mesh, const std::vector<Rgb>& colors, int K,
                                         std::uint64_t seed, double normal_weight, double temperature) {
    const size_t V = mesh.vertices.size();
    if (colors.size() != V) throw std::invalid_argument("vertex colors do not match the mesh");
    if (K < 1 || size_t(K) > V) throw std::invalid_argument("bad class count for k-means");
    using Feature = Eigen::Matrix<double, 6, 1>;
    std::vector<Feature> f(V);
    for (size_t v = 0; v < V; ++v) {
        f[v].head<3>() = colors[v].cast<double>();
        f[v].tail<3>() = normal_weight * mesh.normals[v];
    }
    std::mt19937_64 rng(seed);
    // k-means++ seeding
    std::vector<Feature> c;
    c.push_back(f[std::uniform_int_distribution<size_t>(0, V - 1)(rng)]);
    std::vector<double> d2(V);
    while (int(c.size()) < K) {
        for (size_t v = 0; v < V; ++v) {
            d2[v] = std::numeric_limits<double>::infinity();
            for (const auto& cc : c) d2[v] = std::min(d2[v], (f[v] - cc).squaredNorm());
        }
        std::discrete_distribution<size_t> pick(d2.begin(), d2.end());
        c.push_back(f[pick(rng)]);
    }
    std::vector<int> assign(V, 0);
    for (int it = 0; it < 50; ++it) {
        bool changed = false;
        for (size_t v = 0; v < V; ++v) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                const double d = (f[v] - c[size_t(k)]).squaredNorm();
                if (d < bd) bd = d, best = k;
            }
            changed |= assign[v] != best;
            assign[v] = best;
        }
        std::vector<Feature> sum(size_t(K), Feature::Zero());
        std::vector<int> cnt(size_t(K), 0);
        for (size_t v = 0; v < V; ++v) sum[size_t(assign[v])] += f[v], ++cnt[size_t(assign[v])];
        for (int k = 0; k < K; ++k)
            if (cnt[size_t(k)] > 0) c[size_t(k)] = sum[size_t(k)] / cnt[size_t(k)];
        if (!changed && it > 0) break;
    }
    VertexProbabilities out;
    out.classes = K;
    out.count.assign(V, 1);
    out.p.resize(V);
    for (size_t v = 0; v < V; ++v) {
        Eigen::VectorXd d(K);
        for (int k = 0; k < K; ++k) d[k] = (f[v] - c[size_t(k)]).squaredNorm();
        const double m = d.minCoeff();
        Eigen::VectorXd p = (-(d.array() - m) / temperature).exp().matrix();
        out.p[v] = p / p.sum();
    }
    return out;
}

}  // namespace slf::matseg
