#pragma once

#include "slf/geometry.hpp"

namespace slf {

struct RayHit {
    double t = 0;
    int face = -1;
    Vec3 bary = Vec3::Zero();
};

/// Bounding-volume hierarchy over a triangle mesh. Holds a reference to the
/// mesh, which must outlive the caster.
class RayCaster {
public:
    explicit RayCaster(const TriangleMesh& mesh);

    std::optional<RayHit> intersect(const Vec3& origin, const Vec3& dir, double t_max = 1e30) const;
    bool occluded(const Vec3& origin, const Vec3& dir, double t_max = 1e30) const;

    const TriangleMesh& mesh() const { return *mesh_; }

private:
    struct Node {
        Eigen::Vector3f lo, hi;
        int left = -1, right = -1;  // children, or -1 for leaves
        int first = 0, count = 0;   // leaf range into order_
    };

    int build(int first, int count, std::vector<Vec3>& centroids);
    template <bool AnyHit>
    std::optional<RayHit> traverse(const Vec3& origin, const Vec3& dir, double t_max) const;

    const TriangleMesh* mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;
};

/// Möller-Trumbore ray/triangle test. Returns t and barycentrics (1-u-v, u, v).
bool intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a, const Vec3& b, const Vec3& c, double& t,
                        Vec3& bary);

}  // namespace slf
