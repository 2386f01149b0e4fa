#include "slf/geometry.hpp"

#include <limits>
#include <map>

namespace slf {

void PinholeCamera::validate() const {
    if (!(fx > 0 && fy > 0)) throw std::invalid_argument("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera size must be positive");
    if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
        throw std::invalid_argument("principal point outside the image");
}

PinholeCamera PinholeCamera::scaled(double factor) const {
    PinholeCamera c = *this;
    c.fx = fx * factor;
    c.fy = fy * factor;
    c.cx = (cx + 0.5) * factor - 0.5;
    c.cy = (cy + 0.5) * factor - 0.5;
    c.width = std::max(1, int(std::floor(width * factor)));
    c.height = std::max(1, int(std::floor(height * factor)));
    return c;
}

Pose Pose::from_axis_angle(const Vec3& omega, const Vec3& t) {
    Pose p;
    const double angle = omega.norm();
    if (angle > 0) p.R = Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
    p.t = t;
    return p;
}

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
    const Vec3 z = (target - eye).normalized();
    Vec3 x = z.cross(up);
    if (x.norm() < 1e-12) x = z.cross(Vec3::UnitX().cross(z).norm() > 1e-6 ? Vec3::UnitX() : Vec3::UnitY());
    x.normalize();
    const Vec3 y = z.cross(x);
    Pose p;
    p.R.col(0) = x;
    p.R.col(1) = y;
    p.R.col(2) = z;
    p.t = eye;
    return p;
}

void Pose::validate() const {
    if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 || std::abs(R.determinant() - 1.0) > 1e-9)
        throw std::invalid_argument("pose rotation is not orthonormal");
    if (!t.allFinite()) throw std::invalid_argument("pose translation is not finite");
}

void Pose::orthonormalize() {
    Eigen::JacobiSVD<Mat3> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
    R = svd.matrixU() * svd.matrixV().transpose();
    if (R.determinant() < 0) {
        Mat3 U = svd.matrixU();
        U.col(2) *= -1;
        R = U * svd.matrixV().transpose();
    }
}

Vec3 rotation_log(const Mat3& R) {
    const Eigen::AngleAxisd aa(R);
    return aa.axis() * aa.angle();
}

double rotation_angle_between(const Pose& a, const Pose& b) {
    // atan2 keeps full precision for tiny angles, where acos of the trace does not
    const Mat3 d = a.R.transpose() * b.R;
    const double s = 0.5 * Vec3(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)).norm();
    return std::atan2(s, 0.5 * (d.trace() - 1.0));
}

std::optional<Vec2> project(const PinholeCamera& camera, const Vec3& p) {
    if (p.z() <= 1e-9) return std::nullopt;
    return Vec2(p.x() / p.z() * camera.fx + camera.cx, p.y() / p.z() * camera.fy + camera.cy);
}

Vec3 backproject(const PinholeCamera& camera, const Vec2& pixel, double depth) {
    if (!(depth > 0)) throw std::invalid_argument("backproject requires positive depth");
    return {(pixel.x() - camera.cx) / camera.fx * depth, (pixel.y() - camera.cy) / camera.fy * depth, depth};
}

// --- mesh -------------------------------------------------------------------

Vec3 TriangleMesh::face_normal(int f) const {
    const auto& t = faces[size_t(f)];
    const Vec3 n = (vertices[size_t(t[1])] - vertices[size_t(t[0])]).cross(vertices[size_t(t[2])] - vertices[size_t(t[0])]);
    const double len = n.norm();
    return len > 0 ? Vec3(n / len) : Vec3::UnitZ();
}

double TriangleMesh::face_area(int f) const {
    const auto& t = faces[size_t(f)];
    return 0.5 * (vertices[size_t(t[1])] - vertices[size_t(t[0])]).cross(vertices[size_t(t[2])] - vertices[size_t(t[0])]).norm();
}

Vec3 TriangleMesh::point_at(int f, const Vec3& b) const {
    const auto& t = faces[size_t(f)];
    return b[0] * vertices[size_t(t[0])] + b[1] * vertices[size_t(t[1])] + b[2] * vertices[size_t(t[2])];
}

Vec3 TriangleMesh::normal_at(int f, const Vec3& b) const {
    const auto& t = faces[size_t(f)];
    const Vec3 n = b[0] * normals[size_t(t[0])] + b[1] * normals[size_t(t[1])] + b[2] * normals[size_t(t[2])];
    const double len = n.norm();
    return len > 1e-12 ? Vec3(n / len) : face_normal(f);
}

void TriangleMesh::compute_normals() {
    normals.assign(vertices.size(), Vec3::Zero());
    for (const auto& t : faces) {
        // cross product magnitude is twice the area: area weighting for free
        const Vec3 n = (vertices[size_t(t[1])] - vertices[size_t(t[0])]).cross(vertices[size_t(t[2])] - vertices[size_t(t[0])]);
        for (int k = 0; k < 3; ++k) normals[size_t(t[size_t(k)])] += n;
    }
    for (auto& n : normals) {
        const double len = n.norm();
        n = len > 0 ? Vec3(n / len) : Vec3::UnitZ();
    }
}

void TriangleMesh::validate() const {
    const int nv = int(vertices.size());
    for (const auto& t : faces)
        for (int i : t)
            if (i < 0 || i >= nv) throw std::invalid_argument("face index out of range");
    if (normals.size() != vertices.size()) throw std::invalid_argument("normal count differs from vertex count");
    for (const auto& n : normals)
        if (std::abs(n.norm() - 1.0) > 1e-6) throw std::invalid_argument("normal is not unit length");
    if (!uv_charts.empty() && uv_charts.size() != faces.size())
        throw std::invalid_argument("uv chart count differs from face count");
}

int TriangleMesh::append(const TriangleMesh& other) {
    const int base = int(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
    for (auto t : other.faces) faces.push_back({t[0] + base, t[1] + base, t[2] + base});
    uv_charts.clear();
    return base;
}

std::vector<std::array<int, 2>> mesh_edges(const TriangleMesh& mesh) {
    std::vector<std::array<int, 2>> edges;
    edges.reserve(mesh.faces.size() * 3);
    for (const auto& t : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            int a = t[size_t(k)], b = t[size_t((k + 1) % 3)];
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            edges.push_back({a, b});
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

std::vector<std::vector<int>> vertex_adjacency(const TriangleMesh& mesh) {
    std::vector<std::vector<int>> adj(mesh.vertices.size());
    for (const auto& e : mesh_edges(mesh)) {
        adj[size_t(e[0])].push_back(e[1]);
        adj[size_t(e[1])].push_back(e[0]);
    }
    return adj;
}

// --- primitives -------------------------------------------------------------

TriangleMesh make_plane(const Vec3& center, const Vec3& axis_u, const Vec3& axis_v, double size_u, double size_v,
                        int segments_u, int segments_v) {
    TriangleMesh m;
    const Vec3 u = axis_u.normalized(), v = axis_v.normalized();
    const Vec3 n = u.cross(v).normalized();
    for (int j = 0; j <= segments_v; ++j) {
        for (int i = 0; i <= segments_u; ++i) {
            const double a = double(i) / segments_u - 0.5, b = double(j) / segments_v - 0.5;
            m.vertices.push_back(center + a * size_u * u + b * size_v * v);
            m.normals.push_back(n);
        }
    }
    const int row = segments_u + 1;
    for (int j = 0; j < segments_v; ++j) {
        for (int i = 0; i < segments_u; ++i) {
            const int a = j * row + i, b = a + 1, c = a + row + 1, d = a + row;
            m.faces.push_back({a, b, c});
            m.faces.push_back({a, c, d});
        }
    }
    return m;
}

TriangleMesh make_box(const Vec3& center, const Vec3& h, int segments) {
    TriangleMesh m;
    struct Side {
        Vec3 n, u, v;
        double du, dv, dn;
    };
    const Side sides[] = {
        {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ(), h.y(), h.z(), h.x()},
        {-Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY(), h.z(), h.y(), h.x()},
        {Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX(), h.z(), h.x(), h.y()},
        {-Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitZ(), h.x(), h.z(), h.y()},
        {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY(), h.x(), h.y(), h.z()},
        {-Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX(), h.y(), h.x(), h.z()},
    };
    for (const auto& s : sides)
        m.append(make_plane(center + s.n * s.dn, s.u, s.v, 2 * s.du, 2 * s.dv, segments, segments));
    return m;
}

TriangleMesh make_sphere(const Vec3& c, double r, int nlon, int nlat) {
    TriangleMesh m;
    auto dir = [](double theta, double phi) {
        return Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
    };
    m.vertices.push_back(c + r * Vec3::UnitZ());
    m.normals.push_back(Vec3::UnitZ());
    for (int j = 1; j < nlat; ++j) {
        for (int i = 0; i < nlon; ++i) {
            const Vec3 d = dir(kPi * j / nlat, 2 * kPi * i / nlon);
            m.vertices.push_back(c + r * d);
            m.normals.push_back(d);
        }
    }
    const int south = int(m.vertices.size());
    m.vertices.push_back(c - r * Vec3::UnitZ());
    m.normals.push_back(-Vec3::UnitZ());
    auto ring = [nlon](int j, int i) { return 1 + (j - 1) * nlon + (i % nlon); };
    for (int i = 0; i < nlon; ++i) m.faces.push_back({0, ring(1, i), ring(1, i + 1)});
    for (int j = 1; j < nlat - 1; ++j) {
        for (int i = 0; i < nlon; ++i) {
            const int a = ring(j, i), b = ring(j + 1, i), cc = ring(j + 1, i + 1), d = ring(j, i + 1);
            m.faces.push_back({a, b, cc});
            m.faces.push_back({a, cc, d});
        }
    }
    for (int i = 0; i < nlon; ++i) m.faces.push_back({ring(nlat - 1, i), south, ring(nlat - 1, i + 1)});
    return m;
}

TriangleMesh make_cylinder(const Vec3& base, const Vec3& axis_in, double r, double height, int segments, int rings,
                           bool caps) {
    TriangleMesh m;
    const Vec3 axis = axis_in.normalized();
    Vec3 e1 = axis.unitOrthogonal();
    const Vec3 e2 = axis.cross(e1);
    for (int k = 0; k <= rings; ++k) {
        for (int i = 0; i < segments; ++i) {
            const double phi = 2 * kPi * i / segments;
            const Vec3 n = std::cos(phi) * e1 + std::sin(phi) * e2;
            m.vertices.push_back(base + axis * (height * k / rings) + r * n);
            m.normals.push_back(n);
        }
    }
    auto idx = [segments](int k, int i) { return k * segments + (i % segments); };
    for (int k = 0; k < rings; ++k) {
        for (int i = 0; i < segments; ++i) {
            const int a = idx(k, i), b = idx(k, i + 1), c = idx(k + 1, i + 1), d = idx(k + 1, i);
            m.faces.push_back({a, b, c});
            m.faces.push_back({a, c, d});
        }
    }
    if (caps) {
        for (int top = 0; top < 2; ++top) {
            const Vec3 n = top ? axis : Vec3(-axis);
            const Vec3 center = base + (top ? height : 0.0) * axis;
            const int first = int(m.vertices.size());
            m.vertices.push_back(center);
            m.normals.push_back(n);
            for (int i = 0; i < segments; ++i) {
                const double phi = 2 * kPi * i / segments;
                m.vertices.push_back(center + r * (std::cos(phi) * e1 + std::sin(phi) * e2));
                m.normals.push_back(n);
            }
            for (int i = 0; i < segments; ++i) {
                const int a = first + 1 + i, b = first + 1 + (i + 1) % segments;
                if (top)
                    m.faces.push_back({first, a, b});
                else
                    m.faces.push_back({first, b, a});
            }
        }
    }
    return m;
}

// --- atlas ------------------------------------------------------------------

AtlasLayout parameterize_atlas(TriangleMesh& mesh, int atlas_size, const AtlasOptions& options) {
    const int faces = int(mesh.faces.size());
    if (faces == 0) throw std::invalid_argument("cannot parameterize an empty mesh");
    if (atlas_size <= 0) throw std::invalid_argument("atlas size must be positive");
    const int pad = int(std::ceil(options.dilation));
    const int overhead = 2 * pad + options.gutter;

    int leg = 0;
    if (options.texels_per_meter > 0) {
        double longest = 0;
        for (const auto& t : mesh.faces)
            for (int k = 0; k < 3; ++k)
                longest = std::max(longest, (mesh.vertices[size_t(t[size_t(k)])] - mesh.vertices[size_t(t[size_t((k + 1) % 3)])]).norm());
        leg = std::max(options.min_face_texels, int(std::ceil(longest * options.texels_per_meter)));
    } else {
        const int per_row = int(std::ceil(std::sqrt(double(faces))));
        leg = (atlas_size - options.gutter) / per_row - overhead;
    }
    if (leg < options.min_face_texels)
        throw Error("atlas of " + std::to_string(atlas_size) + " texels is too small for " + std::to_string(faces) +
                    " faces");
    const int pitch = leg + overhead;
    const int per_row = (atlas_size - options.gutter) / pitch;
    if (per_row <= 0 || (faces + per_row - 1) / per_row > per_row)
        throw Error("atlas of " + std::to_string(atlas_size) + " texels cannot hold " + std::to_string(faces) +
                    " faces at " + std::to_string(leg) + " texels per face");

    mesh.uv_charts.resize(size_t(faces));
    const double inv = 1.0 / atlas_size;
    for (int f = 0; f < faces; ++f) {
        const int cx = f % per_row, cy = f / per_row;
        const double ox = cx * pitch + options.gutter + pad;
        const double oy = cy * pitch + options.gutter + pad;
        mesh.uv_charts[size_t(f)] = {Vec2(ox * inv, oy * inv), Vec2((ox + leg) * inv, oy * inv),
                                     Vec2(ox * inv, (oy + leg) * inv)};
    }
    return {atlas_size, leg, pitch};
}

Vec3 barycentric_2d(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 v0 = b - a, v1 = c - a, v2 = p - a;
    const double den = v0.x() * v1.y() - v1.x() * v0.y();
    if (std::abs(den) < 1e-300) return {1.0, 0.0, 0.0};
    const double l1 = (v2.x() * v1.y() - v1.x() * v2.y()) / den;
    const double l2 = (v0.x() * v2.y() - v2.x() * v0.y()) / den;
    return {1.0 - l1 - l2, l1, l2};
}

namespace {
double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}
}  // namespace

std::vector<TexelSample> enumerate_texels(const TriangleMesh& mesh, int size, double dilation) {
    if (mesh.uv_charts.size() != mesh.faces.size()) throw std::invalid_argument("mesh has no atlas parameterization");
    std::vector<float> best(size_t(size) * size_t(size), std::numeric_limits<float>::infinity());
    std::vector<int> owner(best.size(), -1);
    std::vector<Vec3> bary(best.size());
    for (int f = 0; f < int(mesh.faces.size()); ++f) {
        const auto& uv = mesh.uv_charts[size_t(f)];
        const Vec2 a = uv[0] * size, b = uv[1] * size, c = uv[2] * size;
        const int x0 = std::max(0, int(std::floor(std::min({a.x(), b.x(), c.x()}) - dilation - 1)));
        const int x1 = std::min(size - 1, int(std::ceil(std::max({a.x(), b.x(), c.x()}) + dilation + 1)));
        const int y0 = std::max(0, int(std::floor(std::min({a.y(), b.y(), c.y()}) - dilation - 1)));
        const int y1 = std::min(size - 1, int(std::ceil(std::max({a.y(), b.y(), c.y()}) + dilation + 1)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Vec2 p(x + 0.5, y + 0.5);
                const Vec3 l = barycentric_2d(p, a, b, c);
                double dist = 0.0;
                if (l.minCoeff() < 0)
                    dist = std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
                if (dist > dilation) continue;
                const size_t i = size_t(y) * size_t(size) + size_t(x);
                if (dist < best[i]) {
                    best[i] = float(dist);
                    owner[i] = f;
                    bary[i] = l;
                }
            }
        }
    }
    std::vector<TexelSample> out;
    for (size_t i = 0; i < owner.size(); ++i) {
        if (owner[i] < 0) continue;
        TexelSample s;
        s.texel = std::uint32_t(i);
        s.face = owner[i];
        s.bary = bary[i];
        s.point = mesh.point_at(s.face, s.bary);
        Vec3 clamped = s.bary.cwiseMax(0.0);
        clamped /= clamped.sum();
        s.normal = mesh.normals.empty() ? mesh.face_normal(s.face) : mesh.normal_at(s.face, clamped);
        out.push_back(s);
    }
    return out;
}

}  // namespace slf
