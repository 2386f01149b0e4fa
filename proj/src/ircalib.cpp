#include "slf/ircalib.hpp"

#include <Eigen/Dense>

namespace slf::ircalib {

double predict(const IrCalibration& c, double n_dot_l, double d) {
    if (!(d > 0)) throw std::invalid_argument("distance must be positive");
    if (n_dot_l <= 0) return 0.0;
    return std::clamp(std::pow(c.kappa * n_dot_l / (kPi * d * d), c.gamma), 0.0, 1.0);
}

std::vector<CalibrationSample> samples_from_ir(const std::vector<IrSample>& samples) {
    std::vector<CalibrationSample> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        if (s.n_dot_l() > 0) out.push_back({s.L, s.n_dot_l(), s.d});
    return out;
}

namespace {

struct Fit {
    std::vector<double> log_s, L;

    double cost(double a, double g, Eigen::Matrix2d* JtJ = nullptr, Eigen::Vector2d* Jtr = nullptr) const {
        double c = 0;
        if (JtJ) JtJ->setZero(), Jtr->setZero();
        for (size_t i = 0; i < L.size(); ++i) {
            const double x = a + log_s[i];
            const double m = std::exp(g * x);
            const double r = L[i] - m;
            c += r * r;
            if (JtJ) {
                const Eigen::Vector2d J(-g * m, -x * m);
                *JtJ += J * J.transpose();
                *Jtr += J * r;
            }
        }
        return c;
    }
};

}  // namespace

IrCalibration calibrate(const std::vector<CalibrationSample>& samples, const CalibrationOptions& opt) {
    Fit fit;
    std::vector<double> kappa0;
    for (const auto& s : samples) {
        if (!(s.d > 0) || !(s.n_dot_l > 0) || !(s.L >= 0 && s.L <= 1))
            throw std::invalid_argument("calibration sample outside its domain");
        if (s.L >= opt.saturation) continue;
        const double shading = s.n_dot_l / (kPi * s.d * s.d);
        fit.log_s.push_back(std::log(shading));
        fit.L.push_back(s.L);
        if (s.L > 0) kappa0.push_back(s.L / shading);
    }
    if (fit.L.size() < 2) throw std::invalid_argument("calibration needs at least two unsaturated samples");
    const auto [lo, hi] = std::minmax_element(fit.log_s.begin(), fit.log_s.end());
    if (*hi - *lo < 1e-9) throw Error("IR calibration is unidentifiable: all samples share the same shading");
    if (kappa0.empty()) throw Error("IR calibration has no signal");

    std::nth_element(kappa0.begin(), kappa0.begin() + std::ptrdiff_t(kappa0.size() / 2), kappa0.end());
    double a = std::log(kappa0[kappa0.size() / 2]), g = 1.0;
    double lambda = opt.lambda0;
    Eigen::Matrix2d JtJ;
    Eigen::Vector2d Jtr;
    double cost = fit.cost(a, g, &JtJ, &Jtr);

    IrCalibration out;
    out.converged = false;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        if (cost <= 1e-30) {
            out.converged = true;
            break;
        }
        Eigen::Matrix2d A = JtJ;
        A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
        const Eigen::Vector2d step = A.ldlt().solve(-Jtr);
        const double na = a + step[0], ng = std::clamp(g + step[1], 1e-6, 2.0);
        const double nc = fit.cost(na, ng);
        if (nc < cost) {
            const double rel = (cost - nc) / cost;
            a = na, g = ng;
            cost = fit.cost(a, g, &JtJ, &Jtr);
            lambda = std::max(lambda / 10, 1e-12);
            if (rel < opt.relative_tolerance) {
                out.converged = true;
                ++it;
                break;
            }
        } else {
            lambda *= 10;
            if (lambda > 1e16) {
                // no descent direction left: at a minimum to machine precision
                out.converged = true;
                break;
            }
        }
    }
    out.kappa = std::exp(a);
    out.gamma = g;
    out.rms = std::sqrt(cost / double(fit.L.size()));
    out.iterations = it;
    return out;
}

}  // namespace slf::ircalib
