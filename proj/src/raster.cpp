#include "slf/raster.hpp"

#include "slf/raycast.hpp"

namespace slf {

SurfaceMap rasterize(const TriangleMesh& mesh, const PinholeCamera& camera, const Pose& camera_to_world) {
    SurfaceMap map;
    map.depth = ImageF(camera.width, camera.height, 0.0f);
    map.face = Image<int>(camera.width, camera.height, -1);
    map.bary = Image<Eigen::Vector3f>(camera.width, camera.height, Eigen::Vector3f::Zero());
    std::vector<double> zbuf(size_t(camera.width) * size_t(camera.height), 1e30);

    const Pose world_to_camera = camera_to_world.inverse();
    std::vector<Vec3> cam(mesh.vertices.size());
    for (size_t i = 0; i < cam.size(); ++i) cam[i] = world_to_camera * mesh.vertices[i];

    constexpr double kNear = 1e-3;
    const Vec3 origin = Vec3::Zero();
    for (int f = 0; f < int(mesh.faces.size()); ++f) {
        const auto& tri = mesh.faces[size_t(f)];
        const Vec3 &a = cam[size_t(tri[0])], &b = cam[size_t(tri[1])], &c = cam[size_t(tri[2])];
        if (a.z() < kNear && b.z() < kNear && c.z() < kNear) continue;
        int x0 = 0, x1 = camera.width - 1, y0 = 0, y1 = camera.height - 1;
        if (a.z() >= kNear && b.z() >= kNear && c.z() >= kNear) {
            double lx = 1e30, hx = -1e30, ly = 1e30, hy = -1e30;
            for (const Vec3* p : {&a, &b, &c}) {
                const Vec2 q = *project(camera, *p);
                lx = std::min(lx, q.x());
                hx = std::max(hx, q.x());
                ly = std::min(ly, q.y());
                hy = std::max(hy, q.y());
            }
            x0 = std::max(x0, int(std::floor(lx)));
            x1 = std::min(x1, int(std::ceil(hx)));
            y0 = std::max(y0, int(std::floor(ly)));
            y1 = std::min(y1, int(std::ceil(hy)));
        }
        // triangles crossing the near plane fall back to a full-image scan
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec3 dir((x - camera.cx) / camera.fx, (y - camera.cy) / camera.fy, 1.0);
                double t;
                Vec3 bary;
                if (!intersect_triangle(origin, dir, a, b, c, t, bary)) continue;
                if (t < kNear) continue;
                const size_t i = size_t(y) * size_t(camera.width) + size_t(x);
                if (t < zbuf[i]) {
                    zbuf[i] = t;
                    map.depth.pixels[i] = float(t);
                    map.face.pixels[i] = f;
                    map.bary.pixels[i] = bary.cast<float>();
                }
            }
        }
    }
    return map;
}

Vec3 surface_normal(const TriangleMesh& mesh, const SurfaceMap& map, int x, int y) {
    return mesh.normal_at(map.face(x, y), map.bary(x, y).cast<double>());
}

Vec3 surface_point(const TriangleMesh& mesh, const SurfaceMap& map, int x, int y) {
    return mesh.point_at(map.face(x, y), map.bary(x, y).cast<double>());
}

Image<Vec3f> normal_image(const TriangleMesh& mesh, const SurfaceMap& map) {
    Image<Vec3f> out(map.face.width, map.face.height, Vec3f::Zero());
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            if (map.valid(x, y)) out(x, y) = surface_normal(mesh, map, x, y).cast<float>();
    return out;
}

Image<Vec3f> normals_from_depth(const ImageF& depth, const PinholeCamera& camera) {
    Image<Vec3f> out(depth.width, depth.height, Vec3f::Zero());
    auto point = [&](int x, int y) { return backproject(camera, Vec2(x, y), depth(x, y)); };
    for (int y = 1; y + 1 < depth.height; ++y) {
        for (int x = 1; x + 1 < depth.width; ++x) {
            if (depth(x, y) <= 0 || depth(x - 1, y) <= 0 || depth(x + 1, y) <= 0 || depth(x, y - 1) <= 0 ||
                depth(x, y + 1) <= 0)
                continue;
            const Vec3 dx = point(x + 1, y) - point(x - 1, y);
            const Vec3 dy = point(x, y + 1) - point(x, y - 1);
            Vec3 n = dy.cross(dx);
            const double len = n.norm();
            if (len <= 0) continue;
            n /= len;
            if (n.dot(point(x, y)) > 0) n = -n;
            out(x, y) = n.cast<float>();
        }
    }
    return out;
}

}  // namespace slf
