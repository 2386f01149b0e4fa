#include "slf/geometry.hpp"
#include "slf/io.hpp"
#include "slf/raster.hpp"
#include "slf/raycast.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

using namespace slf;

namespace {

PinholeCamera cam500() {
    PinholeCamera c;
    c.fx = c.fy = 500;
    c.cx = 320;
    c.cy = 240;
    return c;
}

Pose random_pose(std::mt19937& rng) {
    std::normal_distribution<double> g(0, 1);
    return Pose::from_axis_angle(Vec3(g(rng), g(rng), g(rng)), Vec3(g(rng), g(rng), g(rng)));
}

}  // namespace

TEST(Project, OpticalAxisHitsPrincipalPoint) {
    const auto x = project(cam500(), Vec3(0, 0, 1));
    ASSERT_TRUE(x);
    EXPECT_DOUBLE_EQ(x->x(), 320);
    EXPECT_DOUBLE_EQ(x->y(), 240);
}

TEST(Project, DirectEvaluation) {
    const auto x = project(cam500(), Vec3(1, 0, 2));
    ASSERT_TRUE(x);
    EXPECT_DOUBLE_EQ(x->x(), 570);
    EXPECT_DOUBLE_EQ(x->y(), 240);
}

TEST(Project, BehindCameraIsNotProjectable) {
    EXPECT_FALSE(project(cam500(), Vec3(0, 0, -1)));
    EXPECT_FALSE(project(cam500(), Vec3(0, 0, 1e-10)));
}

TEST(Backproject, PrincipalRayAndInverse) {
    EXPECT_TRUE(backproject(cam500(), Vec2(320, 240), 1).isApprox(Vec3(0, 0, 1)));
    EXPECT_TRUE(backproject(cam500(), Vec2(570, 240), 2).isApprox(Vec3(1, 0, 2)));
    EXPECT_THROW(backproject(cam500(), Vec2(1, 1), 0), std::invalid_argument);
    EXPECT_THROW(backproject(cam500(), Vec2(1, 1), -2), std::invalid_argument);
}

TEST(Backproject, RoundTripOnRandomPixels) {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> ux(0, 640), uy(0, 480), uz(0.1, 10);
    for (int i = 0; i < 100; ++i) {
        const Vec2 px(ux(rng), uy(rng));
        const auto back = project(cam500(), backproject(cam500(), px, uz(rng)));
        ASSERT_TRUE(back);
        EXPECT_LT((*back - px).norm(), 1e-6);
    }
}

TEST(Camera, ValidationAndScaling) {
    PinholeCamera c;
    EXPECT_NO_THROW(c.validate());
    c.cx = 700;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    const PinholeCamera half = PinholeCamera().scaled(0.5);
    EXPECT_EQ(half.width, 320);
    EXPECT_EQ(half.height, 240);
    EXPECT_DOUBLE_EQ(half.fx, 262.5);
    EXPECT_DOUBLE_EQ(half.cx, 159.5);
}

TEST(Transform, IdentityInverseAndQuarterTurn) {
    const Vec3 p(0.3, -2, 5);
    EXPECT_EQ(transform(Pose::identity(), p), p);
    std::mt19937 rng(1);
    const Pose T = random_pose(rng);
    EXPECT_LT((transform(T.inverse(), transform(T, p)) - p).norm(), 1e-9);
    const Pose Rz = Pose::from_axis_angle(Vec3(0, 0, kPi / 2), Vec3::Zero());
    EXPECT_LT((transform(Rz, Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(Transform, RigidityAndAssociativity) {
    std::mt19937 rng(2);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < 50; ++i) {
        const Pose A = random_pose(rng), B = random_pose(rng), C = random_pose(rng);
        const Vec3 p(g(rng), g(rng), g(rng)), q(g(rng), g(rng), g(rng));
        EXPECT_NEAR((A * p - A * q).norm(), (p - q).norm(), 1e-9);
        EXPECT_LT((((A * B) * C) * p - (A * (B * C)) * p).norm(), 1e-9);
        EXPECT_NO_THROW((A * B).validate());
    }
}

TEST(Pose, ValidationRejectsNonRotations) {
    Pose p;
    p.R(0, 0) = 1.1;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.R = -Mat3::Identity();
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Mesh, NormalsAreUnitAndEdgesSymmetric) {
    TriangleMesh m = make_sphere(Vec3::Zero(), 1, 16, 8);
    EXPECT_NO_THROW(m.validate());
    for (const auto& n : m.normals) EXPECT_NEAR(n.norm(), 1.0, 1e-6);
    const auto edges = mesh_edges(m);
    std::set<std::pair<int, int>> seen;
    for (const auto& e : edges) {
        EXPECT_LT(e[0], e[1]);
        EXPECT_TRUE(seen.insert({e[0], e[1]}).second);
    }
    const auto adj = vertex_adjacency(m);
    for (size_t a = 0; a < adj.size(); ++a)
        for (int b : adj[a]) EXPECT_NE(std::find(adj[size_t(b)].begin(), adj[size_t(b)].end(), int(a)), adj[size_t(b)].end());
}

TEST(Mesh, ComputedNormalsOfPlanePointUp) {
    TriangleMesh m = make_plane(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), 1, 1, 3, 3);
    m.normals.clear();
    m.compute_normals();
    for (const auto& n : m.normals) EXPECT_LT((n - Vec3::UnitZ()).norm(), 1e-12);
    m.faces.push_back({0, 1, 1000});
    EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(Atlas, TwoFacesGetDisjointChartsWithGutter) {
    TriangleMesh m = make_plane(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), 1, 1, 1, 1);
    ASSERT_EQ(m.faces.size(), 2u);
    parameterize_atlas(m, 64);
    // rasterize both charts at texel resolution; owned texels never touch
    const auto texels = enumerate_texels(m, 64, 0.0);
    std::vector<int> owner(64 * 64, -1);
    for (const auto& t : texels) owner[t.texel] = t.face;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            const int o = owner[size_t(y * 64 + x)];
            if (o < 0) continue;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int xx = x + dx, yy = y + dy;
                    if (xx < 0 || yy < 0 || xx >= 64 || yy >= 64) continue;
                    const int q = owner[size_t(yy * 64 + xx)];
                    EXPECT_TRUE(q < 0 || q == o);
                }
        }
}

TEST(Atlas, BarycentricWeightsSumToOne) {
    TriangleMesh m = make_sphere(Vec3::Zero(), 1, 8, 4);
    parameterize_atlas(m, 128);
    for (const auto& t : enumerate_texels(m, 128)) {
        EXPECT_NEAR(t.bary.sum(), 1.0, 1e-9);
        EXPECT_LT((t.point - m.point_at(t.face, t.bary)).norm(), 1e-12);
    }
}

TEST(Atlas, NoChartOverlapOn500FaceMesh) {
    TriangleMesh m = make_plane(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), 1, 1, 25, 10);
    ASSERT_EQ(m.faces.size(), 500u);
    parameterize_atlas(m, 512);
    const int size = 512;
    // Exhaustive pairwise check: rasterize each chart (plus the gutter
    // half-width) independently and intersect the texel sets.
    std::vector<std::set<int>> cover(m.faces.size());
    for (size_t f = 0; f < m.faces.size(); ++f) {
        const auto& c = m.uv_charts[f];
        Vec2 lo = c[0], hi = c[0];
        for (const auto& p : c) lo = lo.cwiseMin(p), hi = hi.cwiseMax(p);
        for (int y = int(lo.y() * size) - 2; y <= int(hi.y() * size) + 2; ++y)
            for (int x = int(lo.x() * size) - 2; x <= int(hi.x() * size) + 2; ++x) {
                const Vec2 p((x + 0.5) / size, (y + 0.5) / size);
                const Vec3 b = barycentric_2d(p, c[0], c[1], c[2]);
                // inside the chart grown by half a texel
                const double margin = 0.5 / size / ((c[1] - c[0]).norm());
                if (b.minCoeff() >= -margin) cover[f].insert(y * size + x);
            }
        EXPECT_FALSE(cover[f].empty());
    }
    int overlaps = 0;
    for (size_t a = 0; a < cover.size(); ++a)
        for (size_t b = a + 1; b < cover.size(); ++b)
            for (int t : cover[a])
                if (cover[b].count(t)) {
                    ++overlaps;
                    break;
                }
    EXPECT_EQ(overlaps, 0);
}

TEST(Atlas, TooSmallAtlasThrows) {
    TriangleMesh m = make_sphere(Vec3::Zero(), 1, 32, 16);
    EXPECT_THROW(parameterize_atlas(m, 16), Error);
}

TEST(Atlas, EveryTexelMapsToAUniqueFace) {
    TriangleMesh m = make_box(Vec3::Zero(), Vec3::Constant(0.5), 2);
    parameterize_atlas(m, 256);
    const auto texels = enumerate_texels(m, 256);
    std::set<std::uint32_t> ids;
    for (const auto& t : texels) EXPECT_TRUE(ids.insert(t.texel).second);
}

TEST(Raster, DepthMatchesRayCaster) {
    TriangleMesh m = make_sphere(Vec3(0, 0, 0), 0.3, 24, 12);
    m.append(make_plane(Vec3(0, 0, -0.3), Vec3::UnitX(), Vec3::UnitY(), 2, 2, 4, 4));
    PinholeCamera cam;
    cam.width = 160;
    cam.height = 120;
    cam.fx = cam.fy = 130;
    cam.cx = 79.5;
    cam.cy = 59.5;
    const Pose pose = Pose::look_at(Vec3(0.6, -0.9, 0.7), Vec3::Zero(), Vec3::UnitZ());
    const SurfaceMap map = rasterize(m, cam, pose);
    const RayCaster rc(m);
    int checked = 0;
    for (int y = 0; y < cam.height; y += 3)
        for (int x = 0; x < cam.width; x += 3) {
            const Vec3 dir = pose.R * backproject(cam, Vec2(x, y), 1.0);
            const auto hit = rc.intersect(pose.t, dir.normalized());
            ASSERT_EQ(hit.has_value(), map.valid(x, y)) << x << "," << y;
            if (!hit) continue;
            const double z = (pose.R.transpose() * (dir.normalized() * hit->t)).z();
            EXPECT_NEAR(z, map.depth(x, y), 1e-3);
            ++checked;
        }
    EXPECT_GT(checked, 100);
}

TEST(MeshIo, PlyAndObjRoundTrip) {
    TriangleMesh m = make_sphere(Vec3(0.1, 0.2, 0.3), 0.5, 12, 6);
    parameterize_atlas(m, 256);
    const auto dir = std::filesystem::temp_directory_path() / "slf_mesh_io";
    for (const char* name : {"m.ply", "m.obj"}) {
        io::write_mesh(dir / name, m);
        const TriangleMesh r = io::read_mesh(dir / name);
        ASSERT_EQ(r.vertices.size(), m.vertices.size());
        ASSERT_EQ(r.faces, m.faces);
        ASSERT_EQ(r.uv_charts.size(), m.faces.size());
        for (size_t i = 0; i < m.vertices.size(); ++i) {
            EXPECT_LT((r.vertices[i] - m.vertices[i]).norm(), 1e-6);
            EXPECT_LT((r.normals[i] - m.normals[i]).norm(), 1e-6);
        }
        for (size_t f = 0; f < m.faces.size(); ++f)
            for (int k = 0; k < 3; ++k) EXPECT_LT((r.uv_charts[f][size_t(k)] - m.uv_charts[f][size_t(k)]).norm(), 1e-6);
    }
}

TEST(ImageIo, PfmAndHdrRoundTrip) {
    ImageRgb img(7, 5);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 7; ++x) img(x, y) = Rgb(float(x) * 0.3f, float(y) * 0.7f, 0.25f);
    const auto dir = std::filesystem::temp_directory_path() / "slf_image_io";
    io::write_pfm(dir / "a.pfm", img);
    const ImageRgb back = io::read_pfm_rgb(dir / "a.pfm");
    ASSERT_TRUE(back.same_size(img));
    for (size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back.pixels[i], img.pixels[i]);
    io::write_hdr(dir / "a.hdr", img);
    const ImageRgb hdr = io::read_hdr(dir / "a.hdr");
    for (size_t i = 0; i < img.size(); ++i)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(hdr.pixels[i][c], img.pixels[i][c], 0.01 * img.pixels[i].maxCoeff() + 1e-6);
    EXPECT_NO_THROW(io::write_png(dir / "a.png", img));
}
