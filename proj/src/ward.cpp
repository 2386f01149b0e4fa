#include "slf/ward.hpp"

namespace slf::brdf {

WardParams WardParams::clamped() const {
    WardParams w = *this;
    w.rho_s = std::clamp(w.rho_s, kRhoMin, kRhoMax);
    w.alpha_x = std::clamp(w.alpha_x, kAlphaMin, kAlphaMax);
    w.alpha_y = std::clamp(isotropic ? w.alpha_x : w.alpha_y, kAlphaMin, kAlphaMax);
    return w;
}

TangentFrame TangentFrame::from_normal(const Vec3& n_in) {
    TangentFrame f;
    f.normal = n_in.normalized();
    f.tangent = f.normal.unitOrthogonal();
    f.binormal = f.normal.cross(f.tangent);
    return f;
}

TangentFrame TangentFrame::from_tangent(const Vec3& n_in, const Vec3& t_in) {
    TangentFrame f;
    f.normal = n_in.normalized();
    const Vec3 t = t_in - t_in.dot(f.normal) * f.normal;
    if (t.norm() < 1e-9) return from_normal(n_in);
    f.tangent = t.normalized();
    f.binormal = f.normal.cross(f.tangent);
    return f;
}

bool TangentFrame::orthonormal(double tol) const {
    return std::abs(tangent.norm() - 1) < tol && std::abs(binormal.norm() - 1) < tol &&
           std::abs(normal.norm() - 1) < tol && std::abs(tangent.dot(binormal)) < tol &&
           std::abs(tangent.dot(normal)) < tol && std::abs(binormal.dot(normal)) < tol;
}

namespace {

struct Lobe {
    bool valid = false;
    double base = 0;  // value / rho_s
    double xt2 = 0;   // (h.t / ax)^2 / (h.n)^2
    double xb2 = 0;
};

Lobe ward_lobe(const WardParams& w, const TangentFrame& f, const Vec3& v, const Vec3& l) {
    Lobe lobe;
    const double nl = f.normal.dot(l), nv = f.normal.dot(v);
    if (nl <= 0 || nv <= 0 || nl * nv < 1e-8) return lobe;
    const Vec3 h = (v + l).normalized();
    const double hn = h.dot(f.normal);
    if (hn <= 0) return lobe;
    const double ax = w.alpha_x, ay = w.isotropic ? w.alpha_x : w.alpha_y;
    const double hn2 = hn * hn;
    if (w.isotropic) {
        const double tan2 = std::max(0.0, 1.0 - hn2) / hn2;
        lobe.xt2 = tan2 / (ax * ax);
        lobe.xb2 = 0;
    } else {
        const double ht = h.dot(f.tangent) / ax, hb = h.dot(f.binormal) / ay;
        lobe.xt2 = ht * ht / hn2;
        lobe.xb2 = hb * hb / hn2;
    }
    const double e = lobe.xt2 + lobe.xb2;
    lobe.valid = true;
    if (e > 700) return lobe;
    lobe.base = std::exp(-e) / (4.0 * kPi * ax * ay * std::sqrt(nl * nv));
    return lobe;
}

}  // namespace

double ward_eval(const WardParams& beta, const TangentFrame& frame, const Vec3& v, const Vec3& l) {
    const Lobe lobe = ward_lobe(beta, frame, v, l);
    return lobe.valid ? beta.rho_s * lobe.base : 0.0;
}

double ward_eval(const WardParams& beta, const Vec3& n, const Vec3& v, const Vec3& l) {
    WardParams iso = beta;
    iso.isotropic = true;
    return ward_eval(iso, TangentFrame::from_normal(n), v, l);
}

WardDerivatives ward_eval_derivatives(const WardParams& beta, const TangentFrame& frame, const Vec3& v,
                                      const Vec3& l) {
    WardDerivatives d;
    const Lobe lobe = ward_lobe(beta, frame, v, l);
    if (!lobe.valid) return d;
    d.value = beta.rho_s * lobe.base;
    d.d_rho_s = lobe.base;
    if (beta.isotropic) {
        d.d_log_alpha = d.value * (2.0 * lobe.xt2 - 2.0);
        d.d_log_alpha_x = d.d_log_alpha;
        d.d_log_alpha_y = 0;
    } else {
        d.d_log_alpha_x = d.value * (2.0 * lobe.xt2 - 1.0);
        d.d_log_alpha_y = d.value * (2.0 * lobe.xb2 - 1.0);
        d.d_log_alpha = d.d_log_alpha_x + d.d_log_alpha_y;
    }
    return d;
}

double half_angle(const Vec3& n, const Vec3& v, const Vec3& l) {
    const Vec3 h = (v + l).normalized();
    return std::acos(std::clamp(h.dot(n.normalized()), -1.0, 1.0));
}

}  // namespace slf::brdf
