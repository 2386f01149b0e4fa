#include "slf/envmap.hpp"
#include "slf/raster.hpp"
#include "slf/sensorsim.hpp"
#include "slf/tracking.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace slf;
using namespace slf::tracking;

namespace {

PinholeCamera camera_320() {
    PinholeCamera c;
    c.width = 320;
    c.height = 240;
    c.fx = c.fy = 300;
    c.cx = 159.5;
    c.cy = 119.5;
    return c;
}

sim::GroundTruthScene tracking_scene(bool plane_only = false, bool glossy = false) {
    sim::GroundTruthScene s;
    s.mesh = make_plane(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), 1.2, 1.2, 12, 12);
    if (!plane_only) {
        s.mesh.append(make_box(Vec3(-0.15, 0.1, 0.08), Vec3(0.08, 0.06, 0.08), 2));
        s.mesh.append(make_sphere(Vec3(0.15, -0.05, 0.1), 0.1, 24, 12));
    }
    parameterize_atlas(s.mesh, 512);
    sim::SceneMaterial m;
    m.albedo.kind = sim::TexturePattern::Kind::Noise;
    m.albedo.a = Rgb(0.15f, 0.2f, 0.3f);
    m.albedo.b = Rgb(0.9f, 0.8f, 0.6f);
    m.albedo.scale = 0.04;
    if (glossy) m.ward = brdf::WardParams::iso(0.4, 0.1);
    s.materials = {m};
    s.labels.assign(s.mesh.vertices.size(), 0);
    if (glossy) {
        ProceduralEnvironment pe;
        pe.lights = {EnvLight{35, 90, 12, Rgb::Constant(8.0f)}};
        s.environment = make_environment(pe);
    } else {
        s.environment = EnvironmentMap::uniform(Rgb::Constant(0.9f), 32);
    }
    s.camera = camera_320();
    return s;
}

Pose perturb(const Pose& p, double deg, double meters, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    const Vec3 axis = Vec3(n(rng), n(rng), n(rng)).normalized();
    const Vec3 dir = Vec3(n(rng), n(rng), n(rng)).normalized();
    Pose q = p;
    q.R = Eigen::AngleAxisd(deg * kPi / 180, axis).toRotationMatrix() * p.R;
    q.t = p.t + meters * dir;
    return q;
}

struct Model {
    ImageF depth;
    Image<Vec3f> normals;
};

Model model_at(const TriangleMesh& mesh, const PinholeCamera& cam, const Pose& pose) {
    const SurfaceMap s = rasterize(mesh, cam, pose);
    return {s.depth, normal_image(mesh, s)};
}

Mask valid_of(const ImageF& depth) {
    Mask m(depth.width, depth.height, 0);
    for (size_t i = 0; i < depth.size(); ++i) m.pixels[i] = depth.pixels[i] > 0;
    return m;
}

}  // namespace

TEST(Icp, IdenticalDepthIsAFixedPoint) {
    const auto scene = tracking_scene();
    const Pose pose = Pose::look_at(Vec3(0.3, -0.6, 0.6), Vec3::Zero(), Vec3::UnitZ());
    const Model m = model_at(scene.mesh, scene.camera, pose);
    const auto r = icp_align(m.depth, m.depth, m.normals, scene.camera, pose, pose);
    const auto e = pose_error(r.pose, pose);
    EXPECT_LT(e.translation, 1e-6);
    EXPECT_LT(e.rotation, 1e-6);
    EXPECT_FALSE(r.rank_deficient);
}

TEST(Icp, RecoversSmallOffset) {
    const auto scene = tracking_scene();
    const Pose model_pose = Pose::look_at(Vec3(0.3, -0.6, 0.6), Vec3::Zero(), Vec3::UnitZ());
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const Pose truth = perturb(model_pose, 1.0, 0.01, seed);
        const Model m = model_at(scene.mesh, scene.camera, model_pose);
        const ImageF live = rasterize(scene.mesh, scene.camera, truth).depth;
        const auto r = icp_align(live, m.depth, m.normals, scene.camera, model_pose, model_pose);
        const auto e = pose_error(r.pose, truth);
        EXPECT_LT(e.translation, 1e-3) << seed;
        EXPECT_LT(e.rotation * 180 / kPi, 0.05) << seed;
    }
}

TEST(Icp, PlaneOnlySceneIsRankDeficient) {
    const auto scene = tracking_scene(true);
    const Pose model_pose = Pose::look_at(Vec3(0.0, -0.3, 0.8), Vec3::Zero(), Vec3::UnitZ());
    const Pose truth = perturb(model_pose, 0.5, 0.005, 3);
    const Model m = model_at(scene.mesh, scene.camera, model_pose);
    const ImageF live = rasterize(scene.mesh, scene.camera, truth).depth;
    const auto r = icp_align(live, m.depth, m.normals, scene.camera, model_pose, model_pose);
    EXPECT_TRUE(r.rank_deficient);
    // the constrained directions (height and tilt) are still recovered: points land on the plane
    const ImageF back = rasterize(scene.mesh, scene.camera, truth).depth;
    for (int y = 20; y < 220; y += 40)
        for (int x = 20; x < 300; x += 40) {
            const Vec3 w = r.pose * backproject(scene.camera, Vec2(x, y), back(x, y));
            EXPECT_NEAR(w.z(), 0.0, 1e-4);
        }
}

TEST(Icp, TooFewCorrespondencesIsTrackingLoss) {
    const auto scene = tracking_scene();
    const Pose pose = Pose::look_at(Vec3(0.3, -0.6, 0.6), Vec3::Zero(), Vec3::UnitZ());
    const Model m = model_at(scene.mesh, scene.camera, pose);
    const ImageF empty(scene.camera.width, scene.camera.height, 0.0f);
    EXPECT_THROW(icp_align(empty, m.depth, m.normals, scene.camera, pose, pose), TrackingLost);
}

TEST(Photometric, LiveEqualsPredictionIsAFixedPoint) {
    const auto scene = tracking_scene();
    const sim::Simulator simu(scene);
    const Pose pose = Pose::look_at(Vec3(0.3, -0.6, 0.6), Vec3::Zero(), Vec3::UnitZ());
    const auto f = simu.render_frame(scene.camera, pose);
    const auto r = photometric_refine(f.rgb, f.rgb, f.depth, valid_of(f.depth), scene.camera, pose, pose);
    EXPECT_FALSE(r.diverged);
    EXPECT_LT(r.final_cost, 1e-20);
    const auto e = pose_error(r.pose, pose);
    EXPECT_LT(e.translation, 1e-8);
    EXPECT_LT(e.rotation, 1e-8);
}

TEST(Photometric, RefinementReducesPerturbation) {
    const auto scene = tracking_scene();
    const sim::Simulator simu(scene);
    const auto poses = sim::orbit_trajectory(Vec3::Zero(), 0.65, 0.55, 20, -100, 38);
    for (unsigned seed = 1; seed <= 4; ++seed) {
        const Pose ref = poses[seed * 4 - 1], truth = poses[seed * 4];
        const auto pred = simu.render_frame(scene.camera, ref);
        const auto live = simu.render_frame(scene.camera, truth);
        const Pose init = perturb(truth, 2.0, 0.02, seed);
        const auto r = photometric_refine(live.rgb, pred.rgb, pred.depth, valid_of(pred.depth), scene.camera, ref, init);
        const auto e0 = pose_error(init, truth), e1 = pose_error(r.pose, truth);
        EXPECT_FALSE(r.diverged) << seed;
        EXPECT_LT(e1.translation, e0.translation / 10) << seed;
        EXPECT_LT(e1.rotation, e0.rotation / 10) << seed;
    }
}

TEST(Photometric, AcceptedCostsNeverIncrease) {
    const auto scene = tracking_scene();
    const sim::Simulator simu(scene);
    const auto poses = sim::orbit_trajectory(Vec3::Zero(), 0.65, 0.55, 20, -100, 38);
    const auto pred = simu.render_frame(scene.camera, poses[5]);
    const auto live = simu.render_frame(scene.camera, poses[6]);
    for (auto obj : {Objective::GradientMagnitude, Objective::RawIntensity}) {
        PhotometricOptions o;
        o.objective = obj;
        const auto r = photometric_refine(live.rgb, pred.rgb, pred.depth, valid_of(pred.depth), scene.camera, poses[5],
                                          perturb(poses[6], 1.5, 0.015, 2), o);
        ASSERT_EQ(r.level_costs.size(), 3u);
        for (const auto& level : r.level_costs) {
            ASSERT_FALSE(level.empty());
            for (size_t k = 1; k < level.size(); ++k) EXPECT_LE(level[k], level[k - 1]);
        }
    }
}

TEST(Photometric, GradientObjectiveBeatsRawUnderMovingHighlight) {
    const auto scene = tracking_scene(false, true);
    const sim::Simulator simu(scene);
    // consecutive frames two degrees apart: the highlight slides across the texture
    const auto poses = sim::orbit_trajectory(Vec3::Zero(), 0.65, 0.55, 40, -100, 78);
    double grad = 0, raw = 0;
    for (unsigned seed = 1; seed <= 4; ++seed) {
        const Pose ref = poses[seed * 6], truth = poses[seed * 6 + 1];
        const auto pred = simu.render_frame(scene.camera, ref);
        const auto live = simu.render_frame(scene.camera, truth);
        const Pose init = perturb(truth, 1.0, 0.01, seed);
        PhotometricOptions og, orw;
        orw.objective = Objective::RawIntensity;
        const Mask valid = valid_of(pred.depth);
        grad += pose_error(photometric_refine(live.rgb, pred.rgb, pred.depth, valid, scene.camera, ref, init, og).pose,
                           truth).rotation;
        raw += pose_error(photometric_refine(live.rgb, pred.rgb, pred.depth, valid, scene.camera, ref, init, orw).pose,
                          truth).rotation;
    }
    EXPECT_LT(grad, raw);
}

TEST(Photometric, GradientObjectiveIgnoresIntensityOffsets) {
    const auto scene = tracking_scene();
    const sim::Simulator simu(scene);
    const Pose pose = Pose::look_at(Vec3(0.3, -0.6, 0.6), Vec3::Zero(), Vec3::UnitZ());
    const auto f = simu.render_frame(scene.camera, pose);
    const ImageF grey = to_greyscale(f.rgb);
    ImageF brighter = grey;
    for (auto& v : brighter.pixels) v += 0.1f;
    const Mask valid = valid_of(f.depth);
    const Pose T = perturb(Pose(), 0.5, 0.005, 9);
    const PhotometricLevel a(grey, grey, f.depth, valid, scene.camera, Objective::GradientMagnitude, 0.2);
    const PhotometricLevel b(brighter, brighter, f.depth, valid, scene.camera, Objective::GradientMagnitude, 0.2);
    EXPECT_NEAR(a.cost(T), b.cost(T), 1e-6 * std::max(1.0, a.cost(T)));
}

TEST(Photometric, JacobianMatchesFiniteDifferences) {
    const auto scene = tracking_scene();
    const sim::Simulator simu(scene);
    const Pose pose = Pose::look_at(Vec3(0.3, -0.6, 0.6), Vec3::Zero(), Vec3::UnitZ());
    const auto f = simu.render_frame(scene.camera, pose);
    const ImageF grey = to_greyscale(f.rgb);
    for (auto obj : {Objective::GradientMagnitude, Objective::RawIntensity}) {
        const PhotometricLevel level(grey, grey, f.depth, valid_of(f.depth), scene.camera, obj, 0.2);
        std::mt19937_64 rng(4);
        std::uniform_int_distribution<int> pick(0, level.pixel_count() - 1);
        int checked = 0;
        for (unsigned k = 0; k < 60; ++k) {
            const Pose T = perturb(Pose(), 1.0, 0.01, 100 + k);
            const int i = pick(rng);
            double r;
            Vec6 J;
            if (!level.residual(T, i, r, &J)) continue;
            Vec6 fd;
            const double h = 1e-7;
            bool ok = true;
            for (int d = 0; d < 6; ++d) {
                Vec6 xi = Vec6::Zero();
                xi[d] = h;
                double rp, rm;
                ok = ok && level.residual(twist_to_pose(xi) * T, i, rp, nullptr) &&
                     level.residual(twist_to_pose(-xi) * T, i, rm, nullptr);
                fd[d] = (rp - rm) / (2 * h);
            }
            if (!ok) continue;
            // a step may straddle a bilinear cell border, where the interpolant has a kink
            if ((fd - J).norm() > 1e-4 * std::max(J.norm(), 1e-6)) {
                Vec6 fd2;
                const double h2 = 1e-9;
                for (int d = 0; d < 6; ++d) {
                    Vec6 xi = Vec6::Zero();
                    xi[d] = h2;
                    double rp, rm;
                    level.residual(twist_to_pose(xi) * T, i, rp, nullptr);
                    level.residual(twist_to_pose(-xi) * T, i, rm, nullptr);
                    fd2[d] = (rp - rm) / (2 * h2);
                }
                fd = fd2;
            }
            EXPECT_LT((fd - J).norm(), 1e-4 * std::max(J.norm(), 1e-6)) << k;
            ++checked;
        }
        EXPECT_GT(checked, 40);
    }
}

TEST(Pyramid, DownsampleMatchesHalvedIntrinsics) {
    const auto scene = tracking_scene();
    const Pose pose = Pose::look_at(Vec3(0.3, -0.6, 0.6), Vec3::Zero(), Vec3::UnitZ());
    const ImageF d = rasterize(scene.mesh, scene.camera, pose).depth;
    const ImageF half = downsample_depth(d);
    const PinholeCamera c2 = scene.camera.scaled(0.5);
    ASSERT_TRUE(half.same_size(c2.width, c2.height));
    const ImageF direct = rasterize(scene.mesh, c2, pose).depth;
    // averaging depth over 2x2 children is exact only where depth is affine in the pixel; slanted
    // planes make it slightly curved, so compare relative error and allow a few edge pixels
    int n = 0, off = 0;
    for (size_t i = 0; i < half.size(); ++i) {
        if (half.pixels[i] <= 0 || direct.pixels[i] <= 0) continue;
        ++n;
        off += std::abs(half.pixels[i] - direct.pixels[i]) > 0.01 * direct.pixels[i];
    }
    EXPECT_GT(n, 10000);
    EXPECT_LT(off, n / 100);
    ImageF flat(20, 10, 0.3f);
    const ImageF f2 = downsample(flat);
    EXPECT_EQ(f2.width, 10);
    for (float v : f2.pixels) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(Trajectory, JsonLinesRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "slf_traj_test.jsonl";
    std::vector<TrajectoryEntry> t = {{0, Pose::look_at(Vec3(1, 2, 3), Vec3::Zero(), Vec3::UnitZ())},
                                      {5, Pose::from_axis_angle(Vec3(0.1, 0.2, 0.3), Vec3(0.4, 0.5, 0.6))}};
    write_trajectory(path, t);
    const auto back = read_trajectory(path);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].frame, 5);
    EXPECT_EQ(back[0].pose.R, t[0].pose.R);
    EXPECT_EQ(back[1].pose.t, t[1].pose.t);
    std::filesystem::remove(path);
}
