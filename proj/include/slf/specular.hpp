#pragma once

#include "slf/envmap.hpp"
#include "slf/ward.hpp"

namespace slf::render {

struct SpecularOptions {
    /// Upper bound on per-axis subdivision of texels inside a sharp lobe.
    int max_subdivision = 8;
};

/// Deterministic quadrature of the specular term over every environment
/// texel: sum of E(w) f_s(wo, w) (n.w) dw over the upper hemisphere, no
/// visibility. Texels near the mirror direction are split when the lobe is
/// narrower than the texel.
class SpecularIntegrator {
public:
    explicit SpecularIntegrator(const EnvironmentMap& env, SpecularOptions options = {});

    Rgb eval(const brdf::TangentFrame& frame, const brdf::WardParams& beta, const Vec3& wo) const;

    const Mat3& rotation() const { return rotation_; }
    double texel_size() const { return texel_size_; }

private:
    struct Sub {
        Vec3 dir;
        double solid_angle;
    };
    struct Texel {
        EnvTexel t;
        /// subsample directions for each split level, indexed by split - 2
        std::vector<std::vector<Sub>> subs;
    };
    struct Row {
        double theta0, theta1;
        std::vector<Texel> texels;
    };
    std::vector<Row> rows_;
    Mat3 rotation_;
    double texel_size_ = 0;
    SpecularOptions options_;
};

/// Convenience wrapper building a one-off integrator.
Rgb eval_specular(const EnvironmentMap& env, const brdf::TangentFrame& frame, const brdf::WardParams& beta,
                  const Vec3& wo);

}  // namespace slf::render
