#pragma once

// Ward BRDF and the material types shared by the BRDF estimator, the sensor
// simulator and the surface-light-field renderer.

#include "slf/core.hpp"

#include <optional>

namespace slf::brdf {

/// Ward specular parameters (the vector beta). The tangent is the direction
/// of alpha_x; fitted anisotropic materials keep alpha_x >= alpha_y.
struct WardParams {
    double rho_s = 0.0;
    double alpha_x = 0.1;
    double alpha_y = 0.1;
    bool isotropic = true;

    static constexpr double kRhoMin = 0.0, kRhoMax = 1.5;
    static constexpr double kAlphaMin = 0.005, kAlphaMax = 1.0;

    static WardParams iso(double rho_s, double alpha) { return {rho_s, alpha, alpha, true}; }
    static WardParams aniso(double rho_s, double ax, double ay) { return {rho_s, ax, ay, false}; }

    /// Clamps into the admissible box and enforces alpha_x == alpha_y when isotropic.
    WardParams clamped() const;
};

/// Orthonormal shading frame {t, b, n}.
struct TangentFrame {
    Vec3 tangent = Vec3::UnitX();
    Vec3 binormal = Vec3::UnitY();
    Vec3 normal = Vec3::UnitZ();

    /// Arbitrary tangent around n.
    static TangentFrame from_normal(const Vec3& n);
    /// Projects `tangent_dir` into the plane orthogonal to n. Falls back to
    /// from_normal when the direction is (nearly) parallel to n.
    static TangentFrame from_tangent(const Vec3& n, const Vec3& tangent_dir);

    bool orthonormal(double tol = 1e-6) const;
};

/// f_s(v, l) for the original (1992) Ward normalization. Returns 0 for
/// back-facing or grazing configurations with (n.l)(n.v) < 1e-8.
double ward_eval(const WardParams& beta, const TangentFrame& frame, const Vec3& v, const Vec3& l);
/// Isotropic evaluation around a bare normal.
double ward_eval(const WardParams& beta, const Vec3& n, const Vec3& v, const Vec3& l);

/// Ward value with derivatives with respect to rho_s and log-roughness.
struct WardDerivatives {
    double value = 0;
    double d_rho_s = 0;
    double d_log_alpha_x = 0;
    double d_log_alpha_y = 0;
    double d_log_alpha = 0;  ///< isotropic: both roughnesses tied
};
WardDerivatives ward_eval_derivatives(const WardParams& beta, const TangentFrame& frame, const Vec3& v, const Vec3& l);

/// Angle between the half-vector of (v, l) and n, in radians.
double half_angle(const Vec3& n, const Vec3& v, const Vec3& l);

/// Estimated reflectance of one material segment: the specular BRDF plus
/// the IR diffuse albedo. Specular tint is white by construction.
struct MaterialModel {
    int segment = 0;
    WardParams ward;
    double rho = 0.0;               ///< scalar IR diffuse albedo (segment mean in per-point mode)
    std::vector<double> rho_map;    ///< optional per-vertex IR albedo, empty in constant mode
    std::optional<TangentFrame> frame;
    double rms = 0.0;

    /// Shading frame at a surface normal, transporting the segment tangent when present.
    TangentFrame shading_frame(const Vec3& n) const {
        return frame ? TangentFrame::from_tangent(n, frame->tangent) : TangentFrame::from_normal(n);
    }
};

}  // namespace slf::brdf
