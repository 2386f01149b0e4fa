#include "slf/highlight.hpp"
#include "slf/matseg.hpp"
#include "slf/sensorsim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace slf;
using namespace slf::highlight;

namespace {

// Direct evaluation of the reweighting recurrence, written out independently.
double recurrence(const std::vector<double>& q, const std::vector<double>& w, double tau, double v, int iterations) {
    double num = 0, den = 0;
    for (size_t i = 0; i < q.size(); ++i) {
        num += w[i] * q[i];
        den += w[i];
    }
    double est = num / den;
    for (int t = 0; t < iterations; ++t) {
        num = den = 0;
        for (size_t i = 0; i < q.size(); ++i) {
            const double mu = q[i] <= est + tau ? 1.0 : std::exp(-std::pow(est + tau - q[i], 2) / (v * v));
            num += mu * w[i] * q[i];
            den += mu * w[i];
        }
        est = num / den;
    }
    return est;
}

std::vector<WeightedValue> pack(const std::vector<double>& q, const std::vector<double>& w) {
    std::vector<WeightedValue> out;
    for (size_t i = 0; i < q.size(); ++i) out.push_back({q[i], w[i]});
    return out;
}

texfuse::Observation obs(std::uint32_t texel, std::uint32_t frame, Rgb c, float w = 1) {
    texfuse::Observation o;
    o.texel = texel;
    o.frame = frame;
    o.rgb = c;
    o.weight = w;
    return o;
}

// Atlas whose colors are the weighted means of the given observations.
texfuse::TextureAtlas atlas_from(int size, const std::vector<texfuse::Observation>& list) {
    texfuse::TextureAtlas a(size);
    std::vector<Vec3> sum(a.color.size(), Vec3::Zero());
    for (const auto& o : list) {
        sum[o.texel] += double(o.weight) * o.rgb.cast<double>();
        a.weight.pixels[o.texel] += o.weight;
    }
    for (size_t t = 0; t < sum.size(); ++t)
        if (a.weight.pixels[t] > 0) a.color.pixels[t] = (sum[t] / a.weight.pixels[t]).cast<float>();
    return a;
}

}  // namespace

TEST(Irls, WeightIsOneOnAndBelowTheGate) {
    const IrlsParams p;
    EXPECT_EQ(irls_weight(0.4, 0.4 + p.tau, p), 1.0);
    EXPECT_EQ(irls_weight(0.4, 0.1, p), 1.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 1000; ++i) {
        const double e = 0.5 * u(rng);
        const double m = irls_weight(e, e + (1.0 - e) * u(rng), p);  // intensities live in [0, 1]
        EXPECT_GT(m, 0.0);
        EXPECT_LE(m, 1.0);
    }
}

TEST(Irls, ConstantObservationsAreAFixedPoint) {
    for (int it = 1; it <= 4; ++it) {
        IrlsParams p;
        p.iterations = it;
        const auto v = pack({0.37, 0.37, 0.37}, {1, 2, 0.5});
        EXPECT_DOUBLE_EQ(irls_texel(v, p), 0.37);
    }
}

TEST(Irls, SingleBrightOutlierIsRejected) {
    IrlsParams p;
    p.tau = 0.05;
    p.v = 0.1;
    p.iterations = 2;
    const std::vector<double> q = {0.3, 0.3, 0.3, 0.9}, w = {1, 1, 1, 1};
    const double got = irls_texel(pack(q, w), p);
    EXPECT_NEAR(got, 0.3, 0.01);
    EXPECT_NEAR(got, recurrence(q, w, 0.05, 0.1, 2), 1e-12);
}

TEST(Irls, MatchesRecurrenceOnRandomInputs) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> q, w;
        const int n = 2 + int(u(rng) * 20);
        for (int i = 0; i < n; ++i) {
            q.push_back(u(rng));
            w.push_back(0.05 + u(rng));
        }
        IrlsParams p;
        p.iterations = 1 + trial % 3;
        EXPECT_NEAR(irls_texel(pack(q, w), p), recurrence(q, w, p.tau, p.v, p.iterations), 1e-12);
    }
}

TEST(Irls, EstimateNeverRisesWithBrightOutliers) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 300; ++trial) {
        const double base = 0.1 + 0.5 * u(rng);
        std::vector<double> q, w;
        const int clean = 3 + int(u(rng) * 10), bright = int(u(rng) * 8);
        for (int i = 0; i < clean; ++i) q.push_back(base + 0.01 * (u(rng) - 0.5));
        for (int i = 0; i < bright; ++i) q.push_back(base + 0.05 + 0.5 * u(rng));
        for (size_t i = 0; i < q.size(); ++i) w.push_back(0.1 + u(rng));
        double prev = 1e9;
        for (int it = 1; it <= 5; ++it) {
            IrlsParams p;
            p.iterations = it;
            const double e = irls_texel(pack(q, w), p);
            EXPECT_LE(e, prev + 1e-12) << trial << " " << it;
            prev = e;
        }
    }
}

TEST(Irls, ParameterValidation) {
    const auto v = pack({0.2}, {1});
    IrlsParams p;
    p.v = 0;
    EXPECT_THROW(irls_texel(v, p), std::invalid_argument);
    p = {};
    p.tau = -0.1;
    EXPECT_THROW(irls_texel(v, p), std::invalid_argument);
    p = {};
    p.iterations = 0;
    EXPECT_THROW(irls_texel(v, p), std::invalid_argument);
    EXPECT_THROW(irls_texel(pack({0.2}, {0}), IrlsParams{}), std::invalid_argument);
}

TEST(RemoveHighlights, ClampsToTheChannelwiseMean) {
    // the bright observation is gated on greyscale but is darker in blue, so the
    // unclamped estimate would raise the blue channel above the plain mean
    std::vector<texfuse::Observation> list = {obs(0, 0, Rgb(0.3f, 0.3f, 0.3f)), obs(0, 1, Rgb(0.3f, 0.3f, 0.3f)),
                                              obs(0, 2, Rgb(1.0f, 1.0f, 0.0f))};
    const auto atlas = atlas_from(4, list);
    const auto d = remove_highlights(atlas, list);
    const Rgb mean = atlas.color.pixels[0];
    for (int c = 0; c < 3; ++c) EXPECT_LE(d.color.pixels[0][c], mean[c] + 1e-7f);
    EXPECT_NEAR(d.color.pixels[0].x(), 0.3f, 1e-3);
    EXPECT_NEAR(d.color.pixels[0].z(), mean.z(), 1e-6);
}

TEST(RemoveHighlights, PassThroughCases) {
    std::vector<texfuse::Observation> list = {
        obs(1, 0, Rgb(0.9f, 0.9f, 0.9f)),                                       // single observation
        obs(2, 0, Rgb(0.2f, 0.4f, 0.6f)), obs(2, 1, Rgb(0.21f, 0.41f, 0.61f)),  // nothing crosses the gate
        obs(3, 0, Rgb(0.95f, 0.95f, 0.95f)), obs(3, 1, Rgb(0.97f, 0.97f, 0.97f)),  // highlight in every view
    };
    const auto atlas = atlas_from(4, list);
    RemovalStats stats;
    const auto d = remove_highlights(atlas, list, {}, &stats);
    for (int t : {1, 2, 3}) EXPECT_EQ(d.color.pixels[size_t(t)], atlas.color.pixels[size_t(t)]) << t;
    EXPECT_EQ(stats.texels, 3);
    EXPECT_EQ(stats.single, 1);
    EXPECT_EQ(stats.changed, 0);
}

TEST(RemoveHighlights, IdempotentOnItsOutput) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<texfuse::Observation> list;
    for (std::uint32_t t = 0; t < 64; ++t)
        for (std::uint32_t f = 0; f < 8; ++f) {
            const float base = float(0.2 + 0.3 * (t % 7) / 7.0);
            const float spike = u(rng) < 0.3 ? float(0.3 + 0.5 * u(rng)) : 0.0f;
            list.push_back(obs(t, f, Rgb::Constant(base + spike + float(0.005 * u(rng))), float(0.2 + u(rng))));
        }
    const auto atlas = atlas_from(8, list);
    const auto once = remove_highlights(atlas, list);
    const auto twice = remove_highlights(once, list);
    for (size_t t = 0; t < once.color.size(); ++t)
        EXPECT_LT((once.color.pixels[t] - twice.color.pixels[t]).cwiseAbs().maxCoeff(), 1e-6f);
    // feeding D back as one observation per texel changes nothing either
    std::vector<texfuse::Observation> fed;
    for (std::uint32_t t = 0; t < 64; ++t) fed.push_back(obs(t, 0, once.color.pixels[t]));
    const auto again = remove_highlights(once, fed);
    for (size_t t = 0; t < once.color.size(); ++t) EXPECT_EQ(once.color.pixels[t], again.color.pixels[t]);
}

TEST(RemoveHighlights, MissingSidecarIsAnError) {
    std::vector<texfuse::Observation> list = {obs(0, 0, Rgb::Constant(0.5f)), obs(1, 0, Rgb::Constant(0.5f))};
    const auto atlas = atlas_from(4, list);
    list.pop_back();
    EXPECT_THROW(remove_highlights(atlas, list), MissingObservations);
}

TEST(RemoveHighlights, DiffuseSceneIsUnchanged) {
    auto scene = sim::builtin_scene("glossy_plane");
    scene.materials[0].ward = brdf::WardParams::iso(0.0, 0.1);
    scene.camera = scene.camera.scaled(0.5);
    const sim::Simulator simu(scene);
    texfuse::Fuser fuser(scene.mesh, 256, scene.camera, {});
    std::vector<texfuse::Observation> list;
    for (size_t i = 0; i < scene.trajectory.size(); i += 3) {
        const auto f = simu.render_frame(scene.camera, scene.trajectory[i], int(i));
        fuser.add(f.rgb, f.depth, scene.trajectory[i], int(i), &list);
    }
    const auto d = remove_highlights(fuser.atlas(), list);
    for (size_t t = 0; t < d.color.size(); ++t)
        EXPECT_LT((d.color.pixels[t] - fuser.atlas().color.pixels[t]).cwiseAbs().maxCoeff(), 1e-6f);
}

TEST(RemoveHighlights, GlossyPlaneRecoversDiffuseLayer) {
    auto scene = sim::builtin_scene("glossy_plane");
    scene.camera = scene.camera.scaled(0.5);
    const sim::Simulator simu(scene);
    const int size = 256;
    texfuse::Fuser fuser(scene.mesh, size, scene.camera, {});
    std::vector<texfuse::Observation> list;
    for (size_t i = 0; i < scene.trajectory.size(); ++i) {
        const auto f = simu.render_frame(scene.camera, scene.trajectory[i], int(i));
        fuser.add(f.rgb, f.depth, scene.trajectory[i], int(i), &list);
    }
    const ImageRgb truth = simu.diffuse_texture(size);
    const auto d = remove_highlights(fuser.atlas(), list);
    double fused = 0, removed = 0;
    long n = 0;
    for (size_t t = 0; t < truth.size(); ++t) {
        if (!fuser.atlas().observed(std::uint32_t(t))) continue;
        fused += (fuser.atlas().color.pixels[t] - truth.pixels[t]).cast<double>().squaredNorm() / 3;
        removed += (d.color.pixels[t] - truth.pixels[t]).cast<double>().squaredNorm() / 3;
        ++n;
    }
    ASSERT_GT(n, 1000);
    EXPECT_LT(std::sqrt(removed / double(n)), 0.02);
    EXPECT_GT(std::sqrt(fused / double(n)), 0.02);  // the highlights were there to begin with
}

TEST(MetallicRule, ThresholdsSelectSegments) {
    TriangleMesh mesh = make_plane(Vec3::Zero(), Vec3::UnitX(), Vec3::UnitY(), 1, 1, 4, 4);
    parameterize_atlas(mesh, 64);
    std::vector<int> labels(mesh.vertices.size());
    for (size_t v = 0; v < labels.size(); ++v) labels[v] = mesh.vertices[v].x() < 0 ? 0 : (mesh.vertices[v].y() < 0 ? 1 : 2);
    texfuse::TextureAtlas d(64);
    for (auto& c : d.color.pixels) c = Rgb::Constant(0.5f);
    std::vector<brdf::MaterialModel> mats(3);
    for (int s = 0; s < 3; ++s) mats[size_t(s)].segment = s;
    mats[0].rho = 0.01;
    mats[0].ward = brdf::WardParams::iso(0.3, 0.1);  // metal
    mats[1].rho = 0.01;
    mats[1].ward = brdf::WardParams::iso(0.1, 0.1);  // dark but weakly specular
    mats[2].rho = 0.5;
    mats[2].ward = brdf::WardParams::iso(0.3, 0.1);  // bright diffuse
    const auto zeroed = apply_metallic_rule(d, mats, mesh, labels);
    ASSERT_EQ(zeroed, std::vector<int>{0});
    const auto fl = matseg::face_labels(mesh, labels);
    long zero = 0, kept = 0;
    for (const auto& s : enumerate_texels(mesh, 64)) {
        const bool z = d.color.pixels[size_t(s.texel)].isZero();
        if (fl[size_t(s.face)] == 0) {
            EXPECT_TRUE(z);
            ++zero;
        } else if (!z) {
            ++kept;
        }
    }
    EXPECT_GT(zero, 0);
    EXPECT_GT(kept, 0);
    EXPECT_TRUE(MetallicRule{}.applies(mats[0]));
    EXPECT_FALSE(MetallicRule{}.applies(mats[1]));
    EXPECT_FALSE(MetallicRule{}.applies(mats[2]));
}

TEST(Heatmap, ZeroDifferenceIsBlue) {
    texfuse::TextureAtlas a(4);
    a.weight.pixels[0] = 1;
    a.color.pixels[0] = Rgb::Constant(0.4f);
    auto b = a;
    const ImageRgb h0 = difference_heatmap(a, b);
    EXPECT_GT(h0.pixels[0].z(), 0.9f);
    EXPECT_LT(h0.pixels[0].x(), 0.1f);
    b.color.pixels[0] = Rgb::Zero();
    const ImageRgb h1 = difference_heatmap(a, b);
    EXPECT_GT(h1.pixels[0].x(), 0.9f);
    EXPECT_TRUE(h1.pixels[1].isZero());
}
