#include "slf/specular.hpp"

namespace slf::render {

SpecularIntegrator::SpecularIntegrator(const EnvironmentMap& env, SpecularOptions options)
    : rotation_(env.rotation()), options_(options) {
    options_.max_subdivision = std::max(1, options_.max_subdivision);
    rows_.resize(size_t(env.height()));
    for (int y = 0; y < env.height(); ++y) {
        rows_[size_t(y)].theta0 = kPi * y / env.height();
        rows_[size_t(y)].theta1 = kPi * (y + 1) / env.height();
    }
    for (auto& t : env.texels()) {
        if (!(t.radiance.maxCoeff() > 0)) continue;
        Texel tx{t, {}};
        for (int split = 2; split <= options_.max_subdivision; ++split) {
            std::vector<Sub> subs;
            const double dt = (t.theta1 - t.theta0) / split, dp = (t.phi1 - t.phi0) / split;
            for (int i = 0; i < split; ++i) {
                const double th0 = t.theta0 + i * dt, th1 = th0 + dt;
                const double sa = dp * (std::cos(th0) - std::cos(th1));
                for (int j = 0; j < split; ++j)
                    subs.push_back({rotation_ * EnvironmentMap::map_direction(0.5 * (th0 + th1), t.phi0 + (j + 0.5) * dp),
                                    sa});
            }
            tx.subs.push_back(std::move(subs));
        }
        rows_[size_t(std::lround(t.theta0 / kPi * env.height()))].texels.push_back(std::move(tx));
    }
    texel_size_ = std::max(kPi / env.height(), 2.0 * kPi / env.width());
}

namespace {

// Inlined Ward lobe times the cosine term. Matches brdf::ward_eval except
// that lobe values below exp(-30) of the peak are dropped.
struct LobeKernel {
    Vec3 n, t, b, wo;
    double nv, inv_ax2, inv_ay2, scale;
    bool isotropic;

    LobeKernel(const brdf::TangentFrame& f, const brdf::WardParams& w, const Vec3& o)
        : n(f.normal), t(f.tangent), b(f.binormal), wo(o), nv(f.normal.dot(o)) {
        const double ax = w.alpha_x, ay = w.isotropic ? w.alpha_x : w.alpha_y;
        inv_ax2 = 1.0 / (ax * ax);
        inv_ay2 = 1.0 / (ay * ay);
        scale = w.rho_s / (4.0 * kPi * ax * ay);
        isotropic = w.isotropic;
    }

    double operator()(const Vec3& l) const {
        const double nl = n.dot(l);
        if (nl <= 0 || nl * nv < 1e-8) return 0.0;
        const Vec3 h = wo + l;
        const double hn = h.dot(n);
        if (hn <= 0) return 0.0;
        const double hn2 = hn * hn;
        double e;
        if (isotropic) {
            e = std::max(0.0, h.squaredNorm() - hn2) / hn2 * inv_ax2;
        } else {
            const double ht = h.dot(t), hb = h.dot(b);
            e = (ht * ht * inv_ax2 + hb * hb * inv_ay2) / hn2;
        }
        if (e > 30) return 0.0;
        return scale * std::exp(-e) * std::sqrt(nl / nv);
    }
};

}  // namespace

Rgb SpecularIntegrator::eval(const brdf::TangentFrame& frame, const brdf::WardParams& beta, const Vec3& wo) const {
    const Vec3& n = frame.normal;
    Rgb sum = Rgb::Zero();
    if (beta.rho_s <= 0 || n.dot(wo) <= 0) return sum;

    const double a_min = beta.isotropic ? beta.alpha_x : std::min(beta.alpha_x, beta.alpha_y);
    const double a_max = beta.isotropic ? beta.alpha_x : std::max(beta.alpha_x, beta.alpha_y);
    const int split = std::clamp(int(std::ceil(texel_size_ / (0.5 * a_min))), 1, options_.max_subdivision);
    const Vec3 mirror = 2.0 * n.dot(wo) * n - wo;
    // The light direction sits at most twice the half-angle away from the
    // mirror direction, so beyond tan(theta_h) = 4 alpha the lobe is below
    // exp(-16) of its peak.
    const double reach_angle = std::min(kPi, 2.0 * std::atan(4.0 * a_max) + 1.5 * texel_size_);
    const double reach = std::cos(reach_angle);
    // subdivision only pays off inside the lobe core
    const double refine = std::cos(std::min(kPi, 2.0 * std::atan(2.5 * a_max) + 1.5 * texel_size_));
    const Vec3 mirror_map = rotation_.transpose() * mirror;
    const double theta_m = std::acos(std::clamp(mirror_map.z(), -1.0, 1.0));
    const LobeKernel lobe(frame, beta, wo);

    for (const auto& row : rows_) {
        if (row.theta0 - theta_m > reach_angle || theta_m - row.theta1 > reach_angle) continue;
        for (const auto& tx : row.texels) {
            const auto& t = tx.t;
            const double c = t.dir.dot(mirror);
            if (c <= reach) continue;
            if (split == 1 || c <= refine) {
                const double f = lobe(t.dir);
                if (f > 0) sum += t.radiance * float(f * t.solid_angle);
                continue;
            }
            double acc = 0;
            for (const auto& s : tx.subs[size_t(split - 2)]) acc += lobe(s.dir) * s.solid_angle;
            sum += t.radiance * float(acc);
        }
    }
    return sum;
}

Rgb eval_specular(const EnvironmentMap& env, const brdf::TangentFrame& frame, const brdf::WardParams& beta,
                  const Vec3& wo) {
    return SpecularIntegrator(env).eval(frame, beta, wo);
}

}  // namespace slf::render
