#pragma once

// Projector intensity and camera gamma from IR views of a white
// Lambertian target: L = (kappa (n.l) / (pi d^2))^gamma.

#include "slf/irsample.hpp"

namespace slf::ircalib {

struct CalibrationSample {
    double L = 0;        ///< observed intensity in [0,1]
    double n_dot_l = 1;  ///< in (0,1]
    double d = 1;        ///< meters
};

struct IrCalibration {
    double kappa = 1.0;
    double gamma = 1.0;
    double rms = 0.0;
    int iterations = 0;
    /// False when the iteration cap was hit; the fields then hold the best iterate.
    bool converged = true;
};

struct CalibrationOptions {
    int max_iterations = 100;
    double lambda0 = 1e-3;
    double relative_tolerance = 1e-10;
    /// Samples at or above this level are treated as saturated and ignored.
    double saturation = 0.999;
};

/// Levenberg-Marquardt fit in (log kappa, gamma). Throws slf::Error when the
/// shading term (n.l)/d^2 does not vary, std::invalid_argument on bad samples.
IrCalibration calibrate(const std::vector<CalibrationSample>& samples, const CalibrationOptions& options = {});

/// Model prediction clamped to [0,1]; 0 for n.l <= 0.
double predict(const IrCalibration& calib, double n_dot_l, double d);

/// Unclamped model value, used inside the reflectance fit.
inline double model(double kappa, double gamma, double shading) { return std::pow(kappa * shading, gamma); }

std::vector<CalibrationSample> samples_from_ir(const std::vector<IrSample>& samples);

}  // namespace slf::ircalib
