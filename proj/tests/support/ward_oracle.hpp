#pragma once

// Independent Ward forward model producing IR samples for the BRDF fitter.

#include "slf/irsample.hpp"

#include <random>

namespace oracle {

struct WardTruth {
    double rho_s = 0.4;
    double alpha_x = 0.1, alpha_y = 0.1;
    slf::Vec3 tangent = slf::Vec3::UnitX();  ///< world direction of alpha_x
    double rho = 0.3;
    double rho_spread = 0.0;  ///< per-point albedo varies in [rho - spread, rho + spread]
    double kappa = 0.05, gamma = 0.5;
};

/// Ward 1992 written out in spherical half-vector form:
/// rho_s exp(-tan^2(th) (cos^2(ph)/ax^2 + sin^2(ph)/ay^2)) / (4 pi ax ay sqrt(cos_i cos_o)).
inline double ward_reference(const WardTruth& w, const slf::Vec3& n, const slf::Vec3& v, const slf::Vec3& l) {
    const double pi = 3.14159265358979323846;
    const double ci = n.dot(l), co = n.dot(v);
    if (ci <= 0 || co <= 0) return 0;
    const slf::Vec3 h = (v + l).normalized();
    const double th = std::acos(std::clamp(h.dot(n), -1.0, 1.0));
    slf::Vec3 t = w.tangent - w.tangent.dot(n) * n;
    t.normalize();
    const slf::Vec3 b = n.cross(t);
    const double ph = std::atan2(h.dot(b), h.dot(t));
    const double tn = std::tan(th);
    const double e = tn * tn * (std::cos(ph) * std::cos(ph) / (w.alpha_x * w.alpha_x) +
                                std::sin(ph) * std::sin(ph) / (w.alpha_y * w.alpha_y));
    return w.rho_s * std::exp(-e) / (4 * pi * w.alpha_x * w.alpha_y * std::sqrt(ci * co));
}

struct SampleSetup {
    int points = 200;
    int frames = 10;
    double patch = 0.1;            ///< half-size of the observed patch
    double distance = 0.6;         ///< camera distance
    double max_view_deg = 30.0;    ///< maximum camera zenith angle
    double noise = 0.0;            ///< relative intensity noise
    bool cylinder = false;         ///< points on a cylinder of radius 0.2 around the world y axis
    unsigned seed = 1;
};

inline double point_albedo(const WardTruth& w, int id) {
    if (w.rho_spread == 0) return w.rho;
    return w.rho + w.rho_spread * std::sin(1.7 * id + 0.3);
}

/// Every frame looks at every point; saturated or back-facing observations are skipped.
inline std::vector<slf::IrSample> ward_samples(const WardTruth& w, const SampleSetup& s) {
    const double pi = 3.14159265358979323846;
    std::mt19937_64 rng(s.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<slf::Vec3> pts, normals;
    for (int i = 0; i < s.points; ++i) {
        const double a = (2 * u01(rng) - 1) * s.patch, b = (2 * u01(rng) - 1) * s.patch;
        if (s.cylinder) {
            const double ang = a / 0.2;
            normals.emplace_back(std::sin(ang), 0, std::cos(ang));
            pts.push_back(0.2 * normals.back() + slf::Vec3(0, b, -0.2));
        } else {
            pts.emplace_back(a, b, 0);
            normals.emplace_back(0, 0, 1);
        }
    }
    std::vector<slf::IrSample> out;
    for (int f = 0; f < s.frames; ++f) {
        const double th = s.max_view_deg * pi / 180.0 * std::sqrt(u01(rng)), ph = 2 * pi * u01(rng);
        const slf::Vec3 dir(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
        const slf::Vec3 cam = s.distance * dir;
        const slf::Vec3 side = dir.unitOrthogonal();
        const slf::Vec3 proj = cam + 0.075 * side;
        for (int i = 0; i < s.points; ++i) {
            slf::IrSample smp;
            smp.point = pts[size_t(i)];
            smp.n = normals[size_t(i)];
            smp.v = (cam - smp.point).normalized();
            smp.l = (proj - smp.point).normalized();
            smp.h = (smp.v + smp.l).normalized();
            smp.d = (proj - smp.point).norm();
            smp.frame = f;
            smp.point_id = i;
            if (smp.n_dot_l() <= 0.05 || smp.n_dot_v() <= 0.05) continue;
            const double q = point_albedo(w, i) / pi + ward_reference(w, smp.n, smp.v, smp.l);
            double L = std::pow(w.kappa * smp.n_dot_l() / (smp.d * smp.d) * q, w.gamma);
            if (L >= 0.97) continue;
            if (s.noise > 0) L = std::clamp(L * (1 + s.noise * gauss(rng)), 0.0, 1.0);
            smp.L = L;
            out.push_back(smp);
        }
    }
    return out;
}

}  // namespace oracle
