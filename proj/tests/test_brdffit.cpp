#include "slf/brdffit.hpp"

#include "support/ward_oracle.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace slf;
using namespace slf::brdf;

namespace {

ircalib::IrCalibration calib_of(const oracle::WardTruth& w) {
    ircalib::IrCalibration c;
    c.kappa = w.kappa;
    c.gamma = w.gamma;
    return c;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double angle_mod_pi(double a) {
    a = std::fmod(a, kPi);
    return a < 0 ? a + kPi : a;
}

double angle_diff_deg(double a, double b) {
    double d = std::abs(angle_mod_pi(a) - angle_mod_pi(b));
    d = std::min(d, kPi - d);
    return d * 180.0 / kPi;
}

}  // namespace

TEST(Ward, ClosedFormValues) {
    const Vec3 n = Vec3::UnitZ();
    EXPECT_NEAR(ward_eval(WardParams::iso(1, 0.1), n, n, n), 1.0 / (4 * kPi * 0.01), 1e-9);
    EXPECT_NEAR(ward_eval(WardParams::iso(1, 0.1), n, n, n), 7.9577, 1e-4);
    // tan(theta_h) = alpha: one e-fold below the peak (normal view and light tilted symmetrically)
    const double th = std::atan(0.1);
    const Vec3 v2 = (Vec3(std::sin(2 * th), 0, std::cos(2 * th))).normalized();
    const double f0 = ward_eval(WardParams::iso(1, 0.1), n, n, n);
    const double f1 = ward_eval(WardParams::iso(1, 0.1), n, v2, n);
    const double nv = n.dot(v2);
    EXPECT_NEAR(f1 * std::sqrt(nv) / f0, std::exp(-1.0), 1e-9);
}

TEST(Ward, AnisotropicRatio) {
    const TangentFrame f;
    const WardParams w = WardParams::aniso(1, 0.05, 0.3);
    const double th = 0.05;
    // reflect the same view about two half-vectors at the same polar angle
    const Vec3 v = Vec3::UnitZ();
    auto val = [&](double ph) {
        const Vec3 h(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        const Vec3 l = 2 * h.dot(v) * h - v;
        return ward_eval(w, f, v, l);
    };
    const double t2 = std::tan(th) * std::tan(th);
    EXPECT_NEAR(val(0) / val(kPi / 2), std::exp(-t2 * (1 / (0.05 * 0.05) - 1 / (0.09))), 1e-9);
}

TEST(Ward, ReciprocityAndRotationInvariance) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    const Vec3 n = Vec3::UnitZ();
    for (int i = 0; i < 200; ++i) {
        const Vec3 v = Vec3(u(rng), u(rng), std::abs(u(rng)) + 0.1).normalized();
        const Vec3 l = Vec3(u(rng), u(rng), std::abs(u(rng)) + 0.1).normalized();
        const WardParams iso = WardParams::iso(0.5, 0.05 + 0.3 * std::abs(u(rng)));
        const WardParams an = WardParams::aniso(0.5, 0.1, 0.3);
        const TangentFrame f = TangentFrame::from_tangent(n, Vec3(1, 1, 0));
        EXPECT_DOUBLE_EQ(ward_eval(an, f, v, l), ward_eval(an, f, l, v));
        const Eigen::AngleAxisd R(u(rng) * kPi, n);
        const double a = ward_eval(iso, n, v, l), b = ward_eval(iso, n, R * v, R * l);
        EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, a));
    }
}

TEST(Ward, MatchesReferenceFormula) {
    oracle::WardTruth t;
    t.alpha_x = 0.2;
    t.alpha_y = 0.07;
    t.tangent = Vec3(1, 2, 0).normalized();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 100; ++i) {
        const Vec3 v = Vec3(u(rng), u(rng), 1.5).normalized(), l = Vec3(u(rng), u(rng), 1.5).normalized();
        const double a = ward_eval(WardParams::aniso(t.rho_s, t.alpha_x, t.alpha_y),
                                   TangentFrame::from_tangent(Vec3::UnitZ(), t.tangent), v, l);
        EXPECT_NEAR(a, oracle::ward_reference(t, Vec3::UnitZ(), v, l), 1e-9 * std::max(1.0, a));
    }
}

TEST(Ward, LobeDecreasesWithHalfAngle) {
    const Vec3 n = Vec3::UnitZ();
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 60; ++k) {
        const double th = k * kPi / 180.0;
        // mirror configuration at fixed view: light moves so the half-angle grows
        const Vec3 v = n;
        const Vec3 h(std::sin(th), 0, std::cos(th));
        const Vec3 l = 2 * h.dot(v) * h - v;
        if (l.z() <= 0.05) break;
        const double f = ward_eval(WardParams::iso(0.4, 0.1), n, v, l) * std::sqrt(l.z());
        EXPECT_LT(f, prev);
        prev = f;
    }
}

TEST(FitSegment, DiffuseOnlyDataPinsSpecularAlbedo) {
    oracle::WardTruth t;
    t.rho_s = 0;
    t.rho = 0.5;
    const auto samples = oracle::ward_samples(t, {});
    for (auto mode : {AlbedoMode::Constant, AlbedoMode::PerPoint}) {
        FitOptions o;
        o.mode = mode;
        const auto r = fit_segment(samples, calib_of(t), o);
        EXPECT_NEAR(r.model.rho, 0.5, 1e-4);
        EXPECT_NEAR(r.model.ward.rho_s, WardParams::kRhoMin, 1e-12);
        EXPECT_NE(r.status, FitStatus::DiffuseOnly);
    }
}

TEST(FitSegment, NoSpecularSignalFallsBackToDiffuse) {
    oracle::WardTruth t;
    t.rho_s = 0.4;
    t.rho = 0.5;
    // oblique light and view on opposite sides: half-angles far beyond 60 degrees is impossible
    // with a co-located projector, so build the samples by hand
    std::vector<IrSample> samples;
    for (int i = 0; i < 50; ++i) {
        IrSample s;
        s.n = Vec3::UnitZ();
        const double a = 0.1 * i;
        s.v = Vec3(std::cos(a) * 0.95, std::sin(a) * 0.95, 0.1).normalized();
        s.l = Vec3(std::cos(a + 2.5) * 0.95, std::sin(a + 2.5) * 0.95, 0.1).normalized();
        s.h = (s.v + s.l).normalized();
        s.d = 0.5 + 0.01 * i;
        s.frame = i % 3;
        s.point_id = i % 5;
        ASSERT_GT(half_angle(s.n, s.v, s.l), 60 * kPi / 180);
        s.L = std::pow(t.kappa * s.n_dot_l() / (s.d * s.d) * (t.rho / kPi), t.gamma);
        samples.push_back(s);
    }
    FitOptions o;
    o.mode = AlbedoMode::Constant;
    const auto r = fit_segment(samples, calib_of(t), o);
    EXPECT_EQ(r.status, FitStatus::DiffuseOnly);
    EXPECT_NEAR(r.model.rho, 0.5, 1e-6);
    EXPECT_EQ(r.model.ward.rho_s, 0.0);
}

TEST(FitSegment, NoiselessRoundTrip) {
    for (double alpha : {0.05, 0.1, 0.2})
        for (auto mode : {AlbedoMode::Constant, AlbedoMode::PerPoint}) {
            oracle::WardTruth t;
            t.alpha_x = t.alpha_y = alpha;
            oracle::SampleSetup s;
            s.seed = 11;
            const auto samples = oracle::ward_samples(t, s);
            ASSERT_GE(samples.size(), 1500u);
            FitOptions o;
            o.mode = mode;
            const auto r = fit_segment(samples, calib_of(t), o);
            EXPECT_LT(rel(r.model.ward.rho_s, 0.4), 0.02) << alpha;
            EXPECT_LT(rel(r.model.ward.alpha_x, alpha), 0.02) << alpha;
            EXPECT_LT(rel(r.model.rho, 0.3), 0.02) << alpha;
            EXPECT_EQ(r.status, FitStatus::Converged);
            EXPECT_LT(r.model.rms, 1e-6);
        }
}

TEST(FitSegment, PerPointAlbedoIsRecovered) {
    oracle::WardTruth t;
    t.rho_spread = 0.1;
    const auto samples = oracle::ward_samples(t, {});
    const auto r = fit_segment(samples, calib_of(t), {});
    ASSERT_EQ(r.point_ids.size(), r.point_rho.size());
    for (size_t i = 0; i < r.point_ids.size(); ++i)
        EXPECT_NEAR(r.point_rho[i], oracle::point_albedo(t, r.point_ids[i]), 1e-3);
    EXPECT_LT(rel(r.model.ward.rho_s, 0.4), 0.02);
}

TEST(FitSegment, NoisyRoundTripOverSeeds) {
    for (unsigned seed = 1; seed <= 20; ++seed) {
        oracle::WardTruth t;
        t.alpha_x = t.alpha_y = 0.1;
        oracle::SampleSetup s;
        s.noise = 0.01;
        s.seed = seed;
        const auto samples = oracle::ward_samples(t, s);
        FitOptions o;
        o.mode = AlbedoMode::Constant;
        const auto r = fit_segment(samples, calib_of(t), o);
        EXPECT_LT(rel(r.model.ward.rho_s, 0.4), 0.10) << seed;
        EXPECT_LT(rel(r.model.ward.alpha_x, 0.1), 0.10) << seed;
        EXPECT_LT(rel(r.model.rho, 0.3), 0.10) << seed;
    }
}

TEST(FitSegment, AnalyticJacobianMatchesFiniteDifferences) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (bool iso : {true, false}) {
        oracle::WardTruth t;
        t.alpha_x = 0.2;
        t.alpha_y = iso ? 0.2 : 0.08;
        oracle::SampleSetup s;
        s.points = 6;
        s.frames = 8;
        const auto samples = oracle::ward_samples(t, s);
        FitOptions o;
        o.isotropic = iso;
        o.frame = TangentFrame::from_tangent(Vec3::UnitZ(), Vec3(1, 0.3, 0));
        o.min_samples = 10;
        const SegmentProblem prob(samples, calib_of(t), o);
        for (int trial = 0; trial < 50; ++trial) {
            std::vector<double> rho(size_t(prob.groups()));
            for (auto& r : rho) r = 0.05 + u(rng);
            const WardParams w = iso ? WardParams::iso(0.05 + u(rng), 0.03 + 0.5 * u(rng))
                                     : WardParams::aniso(0.05 + u(rng), 0.03 + 0.5 * u(rng), 0.03 + 0.5 * u(rng));
            const Eigen::VectorXd x = prob.pack(w, rho);
            Eigen::VectorXd r0;
            Eigen::MatrixXd J;
            prob.evaluate(x, r0, &J);
            for (int k = 0; k < prob.size(); ++k) {
                const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
                Eigen::VectorXd xp = x, xm = x, rp, rm;
                xp[k] += h;
                xm[k] -= h;
                prob.evaluate(xp, rp);
                prob.evaluate(xm, rm);
                const Eigen::VectorXd fd = (rp - rm) / (2 * h);
                const double scale = std::max(J.col(k).cwiseAbs().maxCoeff(), 1e-12);
                EXPECT_LT((fd - J.col(k)).cwiseAbs().maxCoeff() / scale, 1e-5) << "param " << k;
            }
        }
    }
}

TEST(FitSegment, NormalEquationsMatchDenseJacobian) {
    oracle::WardTruth t;
    oracle::SampleSetup s;
    s.points = 8;
    s.frames = 6;
    const auto samples = oracle::ward_samples(t, s);
    FitOptions o;
    o.min_samples = 10;
    const SegmentProblem prob(samples, calib_of(t), o);
    std::vector<double> rho(size_t(prob.groups()), 0.2);
    const Eigen::VectorXd x = prob.pack(WardParams::iso(0.3, 0.15), rho);
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    prob.evaluate(x, r, &J);
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd Jtr = J.transpose() * r;
    const auto ne = prob.normal_equations(x);
    const int p = prob.beta_size();
    EXPECT_TRUE(ne.B.isApprox(JtJ.topLeftCorner(p, p), 1e-10));
    EXPECT_TRUE(ne.C.isApprox(JtJ.topRightCorner(p, prob.groups()), 1e-10));
    EXPECT_TRUE(ne.D.isApprox(JtJ.bottomRightCorner(prob.groups(), prob.groups()).diagonal(), 1e-10));
    EXPECT_TRUE(ne.g_beta.isApprox(Jtr.head(p), 1e-10));
    EXPECT_NEAR(ne.cost, r.squaredNorm(), 1e-12);
}

TEST(FitSegment, AnisotropicWithKnownFrame) {
    oracle::WardTruth t;
    t.rho_s = 0.5;
    t.alpha_x = 0.25;
    t.alpha_y = 0.06;
    t.tangent = Vec3(std::cos(0.6), std::sin(0.6), 0);
    oracle::SampleSetup s;
    s.frames = 16;
    const auto samples = oracle::ward_samples(t, s);
    FitOptions o;
    o.isotropic = false;
    o.mode = AlbedoMode::Constant;
    o.frame = TangentFrame::from_tangent(Vec3::UnitZ(), t.tangent);
    auto r = fit_segment(samples, calib_of(t), o);
    EXPECT_LT(rel(r.model.ward.alpha_x, 0.25), 0.02);
    EXPECT_LT(rel(r.model.ward.alpha_y, 0.06), 0.02);
    EXPECT_LT(rel(r.model.ward.rho_s, 0.5), 0.02);
    // a frame rotated by 90 degrees fits the swapped roughnesses and is turned back
    o.frame = TangentFrame::from_tangent(Vec3::UnitZ(), Vec3::UnitZ().cross(t.tangent));
    r = fit_segment(samples, calib_of(t), o);
    EXPECT_GE(r.model.ward.alpha_x, r.model.ward.alpha_y);
    EXPECT_LT(rel(r.model.ward.alpha_x, 0.25), 0.02);
    ASSERT_TRUE(r.model.frame);
    EXPECT_NEAR(std::abs(r.model.frame->tangent.dot(t.tangent)), 1.0, 1e-9);
    EXPECT_TRUE(r.model.frame->orthonormal());
}

TEST(FitSegment, Preconditions) {
    oracle::WardTruth t;
    oracle::SampleSetup s;
    s.points = 5;
    s.frames = 2;
    const auto few = oracle::ward_samples(t, s);
    EXPECT_THROW(fit_segment(few, calib_of(t)), std::invalid_argument);
    s.points = 100;
    s.frames = 1;
    const auto one = oracle::ward_samples(t, s);
    EXPECT_THROW(fit_segment(one, calib_of(t)), std::invalid_argument);
    FitOptions o;
    o.mode = AlbedoMode::Constant;
    EXPECT_NO_THROW(fit_segment(one, calib_of(t), o));
    o.isotropic = false;
    EXPECT_THROW(fit_segment(one, calib_of(t), o), std::invalid_argument);
    auto bad = one;
    bad[0].n = -bad[0].n;
    o.isotropic = true;
    EXPECT_THROW(fit_segment(bad, calib_of(t), o), std::invalid_argument);
}

// --- slices -------------------------------------------------------------------------

namespace {

BrdfSlice planted_slice(double phi, double sx, double sy) {
    BrdfSlice s;
    s.value = ImageF(s.size, s.size);
    s.valid = Mask(s.size, s.size, 1);
    const Vec2 a(std::cos(phi), std::sin(phi)), b(-a.y(), a.x());
    for (int y = 0; y < s.size; ++y)
        for (int x = 0; x < s.size; ++x) {
            const Vec2 p = s.to_plane(Vec2(x, y));
            const double pa = p.dot(a) / sx, pb = p.dot(b) / sy;
            s.value(x, y) = float(0.1 + std::exp(-pa * pa - pb * pb));
        }
    return s;
}

}  // namespace

TEST(Slice, ReferenceSampleProjectsToOrigin) {
    oracle::WardTruth t;
    oracle::SampleSetup s;
    s.cylinder = true;
    const auto samples = oracle::ward_samples(t, s);
    SliceOptions so;
    so.min_coverage = 0;
    const BrdfSlice slice = build_brdf_slice(samples, nullptr, so);
    IrSample ref;
    ref.n = Vec3(0.3, 0, 1).normalized();
    ref.h = ref.n;
    EXPECT_LT(slice_position(slice, ref).norm(), 1e-12);
    // the reference normal is the normal of the sample whose half-vector is closest to it
    double best = -1;
    Vec3 n;
    for (const auto& x : samples)
        if (x.h.dot(x.n) > best) best = x.h.dot(x.n), n = x.n;
    EXPECT_LT((slice.reference_normal - n).norm(), 1e-12);
}

TEST(Slice, PlanarProjectionIsTangentialHalfVector) {
    oracle::WardTruth t;
    const auto samples = oracle::ward_samples(t, {});
    SliceOptions so;
    so.min_coverage = 0;
    const BrdfSlice slice = build_brdf_slice(samples, nullptr, so);
    for (size_t i = 0; i < samples.size(); i += 97) {
        const Vec2 p = slice_position(slice, samples[i]);
        const Vec3 h = samples[i].h;
        EXPECT_NEAR(p.norm(), std::hypot(h.x(), h.y()), 1e-12);
    }
}

TEST(Slice, IsotropicSliceIsRadiallySymmetric) {
    oracle::WardTruth t;
    t.alpha_x = t.alpha_y = 0.12;
    oracle::SampleSetup s;
    s.frames = 40;
    s.points = 300;
    const auto samples = oracle::ward_samples(t, s);
    const auto c = calib_of(t);
    const BrdfSlice slice = build_brdf_slice(samples, &c);
    EXPECT_GT(slice.coverage, 0.9);
    // level sets: values on a ring agree with each other
    for (double r : {0.05, 0.1, 0.15}) {
        double lo = 1e9, hi = -1e9;
        for (int k = 0; k < 16; ++k) {
            const double a = 2 * kPi * k / 16;
            const Vec2 g = slice.to_grid(Vec2(r * std::cos(a), r * std::sin(a)));
            float v = 0;
            ASSERT_TRUE(sample_bilinear(slice.value, g.x(), g.y(), v));
            lo = std::min(lo, double(v));
            hi = std::max(hi, double(v));
        }
        EXPECT_LT((hi - lo) / hi, 0.1) << r;
    }
    EXPECT_THROW(fit_tangent(slice), TangentUndetermined);
}

TEST(Slice, SparseViewsAreRejected) {
    oracle::WardTruth t;
    oracle::SampleSetup s;
    s.frames = 1;
    s.points = 150;
    s.patch = 0.01;
    const auto samples = oracle::ward_samples(t, s);
    EXPECT_THROW(build_brdf_slice(samples), InsufficientViews);
    EXPECT_THROW(build_brdf_slice(std::vector<IrSample>(samples.begin(), samples.begin() + 50)),
                 std::invalid_argument);
}

TEST(Tangent, PlantedSymmetryAxis) {
    const BrdfSlice u_axis = planted_slice(0.0, 0.25, 0.08);
    const TangentFrame f = fit_tangent(u_axis);
    EXPECT_LT(angle_diff_deg(tangent_angle(u_axis, f.tangent), 0.0), 1.0);
    EXPECT_TRUE(f.orthonormal());
    const double phi = 37 * kPi / 180;
    const BrdfSlice rotated = planted_slice(phi, 0.25, 0.08);
    EXPECT_LT(angle_diff_deg(tangent_angle(rotated, fit_tangent(rotated).tangent), phi), 2.0);
    // the wider axis is returned even when it is the second mirror axis
    const BrdfSlice tall = planted_slice(phi, 0.08, 0.25);
    EXPECT_LT(angle_diff_deg(tangent_angle(tall, fit_tangent(tall).tangent), phi + kPi / 2), 2.0);
    EXPECT_THROW(fit_tangent(planted_slice(0, 0.15, 0.15)), TangentUndetermined);
}

TEST(Tangent, RecoveredFromSamplesOnPlaneAndCylinder) {
    for (bool cyl : {false, true})
        for (double deg : {15.0, 37.0, 80.0}) {
            oracle::WardTruth t;
            t.rho_s = 0.5;
            t.alpha_x = 0.25;
            t.alpha_y = 0.06;
            const double a = deg * kPi / 180;
            t.tangent = Vec3(std::cos(a), std::sin(a), 0);
            oracle::SampleSetup s;
            s.frames = 40;
            s.points = 300;
            s.cylinder = cyl;
            s.patch = cyl ? 0.05 : 0.1;
            const auto samples = oracle::ward_samples(t, s);
            const auto c = calib_of(t);
            const BrdfSlice slice = build_brdf_slice(samples, &c);
            const TangentFrame f = fit_tangent(slice);
            const Vec3 n = slice.reference_normal;
            const Vec3 truth = (t.tangent - t.tangent.dot(n) * n).normalized();
            const double err = std::acos(std::min(1.0, std::abs(f.tangent.dot(truth)))) * 180 / kPi;
            EXPECT_LT(err, cyl ? 5.0 : 2.0) << (cyl ? "cylinder " : "plane ") << deg;
        }
}

TEST(Materials, JsonRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "slf_materials_test";
    std::filesystem::create_directories(dir);
    MaterialModel a;
    a.segment = 0;
    a.ward = WardParams::iso(0.3, 0.08);
    a.rho = 0.4;
    MaterialModel b;
    b.segment = 2;
    b.ward = WardParams::aniso(0.5, 0.25, 0.06);
    b.rho = 0.2;
    b.rho_map = {0.1, 0.2, 0.3};
    b.frame = TangentFrame::from_tangent(Vec3::UnitZ(), Vec3(1, 1, 0));
    write_materials(dir / "materials.json", {a, b});
    const auto back = read_materials(dir / "materials.json");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].ward.rho_s, 0.3);
    EXPECT_TRUE(back[0].ward.isotropic);
    EXPECT_FALSE(back[0].frame);
    EXPECT_EQ(back[1].segment, 2);
    EXPECT_FALSE(back[1].ward.isotropic);
    EXPECT_EQ(back[1].ward.alpha_y, 0.06);
    ASSERT_EQ(back[1].rho_map.size(), 3u);
    EXPECT_FLOAT_EQ(float(back[1].rho_map[2]), 0.3f);
    ASSERT_TRUE(back[1].frame);
    EXPECT_LT((back[1].frame->tangent - b.frame->tangent).norm(), 1e-12);
    std::filesystem::remove_all(dir);
}
