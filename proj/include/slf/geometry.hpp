#pragma once

#include "slf/core.hpp"

#include <array>
#include <optional>

namespace slf {

/// Ideal pinhole camera. Pixel centers sit at integer coordinates; the
/// camera looks down +z with x right and y down.
struct PinholeCamera {
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;
    int width = 640;
    int height = 480;

    /// Throws std::invalid_argument when the intrinsics are inconsistent.
    void validate() const;

    /// Intrinsics for an image resampled by `factor` (0.5 halves the resolution).
    PinholeCamera scaled(double factor) const;
};

/// Rigid transform p' = R p + t.
struct Pose {
    Mat3 R = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    static Pose identity() { return {}; }
    /// Rotation given as an axis-angle vector.
    static Pose from_axis_angle(const Vec3& omega, const Vec3& t);
    /// Camera-to-world pose looking from `eye` towards `target`.
    static Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

    Pose inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
    Pose operator*(const Pose& o) const { return {R * o.R, R * o.t + t}; }
    Vec3 operator*(const Vec3& p) const { return R * p + t; }

    /// Throws std::invalid_argument unless R is a rotation within 1e-9.
    void validate() const;
    /// Re-orthonormalizes R (used after accumulating incremental updates).
    void orthonormalize();
};

/// Axis-angle vector of a rotation matrix.
Vec3 rotation_log(const Mat3& R);
/// Rotation angle (radians) between two poses' rotations.
double rotation_angle_between(const Pose& a, const Pose& b);

/// Projects a camera-frame point; std::nullopt when p_z <= 1e-9.
std::optional<Vec2> project(const PinholeCamera& camera, const Vec3& p);
/// Camera-frame point for pixel x at the given depth. Throws
/// std::invalid_argument for depth <= 0.
Vec3 backproject(const PinholeCamera& camera, const Vec2& pixel, double depth);
inline Vec3 transform(const Pose& T, const Vec3& p) { return T * p; }

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<Vec3> normals;
    std::vector<std::array<int, 3>> faces;
    /// Per-face atlas coordinates in [0,1]^2; empty until parameterized.
    std::vector<std::array<Vec2, 3>> uv_charts;

    size_t vertex_count() const { return vertices.size(); }
    size_t face_count() const { return faces.size(); }

    /// Area-weighted average of incident face normals.
    void compute_normals();
    /// Throws std::invalid_argument on out-of-range indices or non-unit normals.
    void validate() const;

    Vec3 face_normal(int f) const;
    double face_area(int f) const;
    Vec3 point_at(int f, const Vec3& bary) const;
    Vec3 normal_at(int f, const Vec3& bary) const;

    /// Appends `other`, offsetting its indices; returns the first new vertex index.
    int append(const TriangleMesh& other);
};

/// Undirected, sorted, duplicate-free edge list (a < b).
std::vector<std::array<int, 2>> mesh_edges(const TriangleMesh& mesh);
/// Symmetric adjacency derived from mesh_edges.
std::vector<std::vector<int>> vertex_adjacency(const TriangleMesh& mesh);

// Primitive builders. All produce outward unit normals.
TriangleMesh make_plane(const Vec3& center, const Vec3& axis_u, const Vec3& axis_v, double size_u, double size_v,
                        int segments_u, int segments_v);
TriangleMesh make_box(const Vec3& center, const Vec3& half_extent, int segments);
TriangleMesh make_sphere(const Vec3& center, double radius, int segments_lon, int segments_lat);
/// Open-ended cylinder along `axis` plus flat caps when `caps` is set.
TriangleMesh make_cylinder(const Vec3& base_center, const Vec3& axis, double radius, double height, int segments,
                           int rings, bool caps);

// --- texture atlas --------------------------------------------------------

struct AtlasOptions {
    /// Face leg length follows longest-edge * texels_per_meter; 0 picks the
    /// largest leg that fits the atlas.
    double texels_per_meter = 0.0;
    int min_face_texels = 4;
    /// Empty texels separating neighbouring charts (after dilation).
    int gutter = 2;
    /// Chart dilation used for bilinear lookups near triangle borders.
    double dilation = 1.5;
};

struct AtlasLayout {
    int size = 0;
    int leg = 0;
    int pitch = 0;
};

/// Lays every face as a right triangle in its own grid cell. Writes
/// mesh.uv_charts. Throws slf::Error when the atlas is too small.
AtlasLayout parameterize_atlas(TriangleMesh& mesh, int atlas_size, const AtlasOptions& options = {});

/// One atlas texel together with the surface point it stands for.
struct TexelSample {
    std::uint32_t texel = 0;  ///< y * size + x
    int face = -1;
    Vec3 bary = Vec3::Zero();  ///< may be slightly outside the triangle inside the dilation band
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
};

/// Enumerates texels owned by each face's (dilated) chart.
std::vector<TexelSample> enumerate_texels(const TriangleMesh& mesh, int atlas_size, double dilation = 1.5);

/// Barycentric coordinates of point p with respect to triangle (a, b, c) in 2D.
Vec3 barycentric_2d(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c);

}  // namespace slf
