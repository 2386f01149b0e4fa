#pragma once

// Independent forward model for IR calibration data.

#include "slf/ircalib.hpp"

#include <random>

namespace oracle {

/// Draws unsaturated samples from L = (kappa (n.l) / (pi d^2))^gamma with
/// d in [0.5, 1.5]; optional Gaussian intensity noise clamped to [0,1].
inline std::vector<slf::ircalib::CalibrationSample> calibration_samples(double kappa, double gamma, int count,
                                                                        double sigma, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ud(0.5, 1.5), unl(0.05, 1.0);
    std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
    std::vector<slf::ircalib::CalibrationSample> out;
    while (int(out.size()) < count) {
        const double d = ud(rng), nl = unl(rng);
        const double clean = std::pow(kappa * nl / (3.14159265358979323846 * d * d), gamma);
        if (clean >= 0.97) continue;  // keep the noisy value clear of saturation
        double L = clean;
        if (sigma > 0) L = std::clamp(L + sigma * noise(rng), 0.0, 1.0);
        out.push_back({L, nl, d});
    }
    return out;
}

}  // namespace oracle
