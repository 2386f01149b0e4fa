#include "slf/raycast.hpp"

#include <numeric>

namespace slf {

bool intersect_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c, double& t,
                        Vec3& bary) {
    const Vec3 e1 = b - a, e2 = c - a;
    const Vec3 p = d.cross(e2);
    const double det = e1.dot(p);
    if (std::abs(det) < 1e-14) return false;
    const double inv = 1.0 / det;
    const Vec3 s = o - a;
    const double u = s.dot(p) * inv;
    if (u < -1e-9 || u > 1 + 1e-9) return false;
    const Vec3 q = s.cross(e1);
    const double v = d.dot(q) * inv;
    if (v < -1e-9 || u + v > 1 + 1e-9) return false;
    t = e2.dot(q) * inv;
    bary = {1.0 - u - v, u, v};
    return true;
}

RayCaster::RayCaster(const TriangleMesh& mesh) : mesh_(&mesh) {
    const int n = int(mesh.faces.size());
    order_.resize(size_t(n));
    std::iota(order_.begin(), order_.end(), 0);
    std::vector<Vec3> centroids(static_cast<size_t>(n));
    for (int f = 0; f < n; ++f) centroids[size_t(f)] = mesh.point_at(f, Vec3::Constant(1.0 / 3.0));
    nodes_.reserve(size_t(2 * n + 1));
    if (n > 0) build(0, n, centroids);
}

int RayCaster::build(int first, int count, std::vector<Vec3>& centroids) {
    const int id = int(nodes_.size());
    nodes_.push_back({});
    Eigen::Vector3f lo = Eigen::Vector3f::Constant(1e30f), hi = Eigen::Vector3f::Constant(-1e30f);
    Vec3 clo = Vec3::Constant(1e30), chi = Vec3::Constant(-1e30);
    for (int i = first; i < first + count; ++i) {
        const int f = order_[size_t(i)];
        for (int k : mesh_->faces[size_t(f)]) {
            const Eigen::Vector3f v = mesh_->vertices[size_t(k)].cast<float>();
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        clo = clo.cwiseMin(centroids[size_t(f)]);
        chi = chi.cwiseMax(centroids[size_t(f)]);
    }
    // pad so float boxes never clip double-precision triangles
    const Eigen::Vector3f eps = (hi - lo).cwiseAbs() * 1e-5f + Eigen::Vector3f::Constant(1e-6f);
    nodes_[size_t(id)].lo = lo - eps;
    nodes_[size_t(id)].hi = hi + eps;
    if (count <= 4) {
        nodes_[size_t(id)].first = first;
        nodes_[size_t(id)].count = count;
        return id;
    }
    int axis = 0;
    (chi - clo).maxCoeff(&axis);
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](int a, int b) { return centroids[size_t(a)][axis] < centroids[size_t(b)][axis]; });
    const int left = build(first, mid - first, centroids);
    const int right = build(mid, first + count - mid, centroids);
    nodes_[size_t(id)].left = left;
    nodes_[size_t(id)].right = right;
    return id;
}

namespace {
bool hit_box(const Eigen::Vector3f& lo, const Eigen::Vector3f& hi, const Vec3& o, const Vec3& inv_d, double t_max) {
    double t0 = 0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
        double ta = (lo[a] - o[a]) * inv_d[a];
        double tb = (hi[a] - o[a]) * inv_d[a];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}
}  // namespace

template <bool AnyHit>
std::optional<RayHit> RayCaster::traverse(const Vec3& origin, const Vec3& dir, double t_max) const {
    if (nodes_.empty()) return std::nullopt;
    const Vec3 inv_d(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
    std::optional<RayHit> best;
    double closest = t_max;
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& node = nodes_[size_t(stack[--top])];
        if (!hit_box(node.lo, node.hi, origin, inv_d, closest)) continue;
        if (node.left < 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                const int f = order_[size_t(i)];
                const auto& tri = mesh_->faces[size_t(f)];
                double t;
                Vec3 bary;
                if (intersect_triangle(origin, dir, mesh_->vertices[size_t(tri[0])], mesh_->vertices[size_t(tri[1])],
                                       mesh_->vertices[size_t(tri[2])], t, bary) &&
                    t > 0 && t < closest) {
                    closest = t;
                    best = RayHit{t, f, bary};
                    if constexpr (AnyHit) return best;
                }
            }
        } else {
            stack[top++] = node.left;
            stack[top++] = node.right;
        }
    }
    return best;
}

std::optional<RayHit> RayCaster::intersect(const Vec3& origin, const Vec3& dir, double t_max) const {
    return traverse<false>(origin, dir, t_max);
}

bool RayCaster::occluded(const Vec3& origin, const Vec3& dir, double t_max) const {
    return traverse<true>(origin, dir, t_max).has_value();
}

}  // namespace slf
