#pragma once

#include "slf/geometry.hpp"

namespace slf {

/// Per-pixel visible surface of a mesh seen through a camera.
struct SurfaceMap {
    ImageF depth;              ///< camera-frame z in meters, 0 where empty
    Image<int> face;           ///< -1 where empty
    Image<Eigen::Vector3f> bary;

    bool valid(int x, int y) const { return face(x, y) >= 0; }
};

/// Z-buffered rasterization with exact per-pixel ray/triangle barycentrics.
SurfaceMap rasterize(const TriangleMesh& mesh, const PinholeCamera& camera, const Pose& camera_to_world);

/// Interpolated world-space normal at a covered pixel.
Vec3 surface_normal(const TriangleMesh& mesh, const SurfaceMap& map, int x, int y);
Vec3 surface_point(const TriangleMesh& mesh, const SurfaceMap& map, int x, int y);

/// World-space normal image (zero where empty).
Image<Vec3f> normal_image(const TriangleMesh& mesh, const SurfaceMap& map);

/// Per-pixel camera-frame normals estimated from a depth image by central
/// differences; zero where neighbours are missing.
Image<Vec3f> normals_from_depth(const ImageF& depth, const PinholeCamera& camera);

}  // namespace slf
