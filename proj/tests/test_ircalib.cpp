#include "slf/ircalib.hpp"
#include "support/calib_oracle.hpp"

#include <gtest/gtest.h>

using namespace slf;
using namespace slf::ircalib;

TEST(Calibrate, ZeroResidualFixedPoint) {
    std::vector<CalibrationSample> s;
    for (int i = 0; i < 50; ++i) {
        const double d = 1.0 + 0.02 * i, nl = 0.3 + 0.01 * i;
        s.push_back({nl / (d * d), nl, d});
    }
    const auto c = calibrate(s);
    EXPECT_NEAR(c.kappa, kPi, 1e-6);
    EXPECT_NEAR(c.gamma, 1.0, 1e-6);
    EXPECT_TRUE(c.converged);
}

TEST(Calibrate, NoiselessRoundTrip) {
    const auto s = oracle::calibration_samples(2.5, 0.45, 500, 0, 1);
    const auto c = calibrate(s);
    EXPECT_NEAR(c.kappa / 2.5, 1.0, 1e-3);
    EXPECT_NEAR(c.gamma / 0.45, 1.0, 1e-3);
    EXPECT_LT(c.rms, 1e-9);
}

TEST(Calibrate, NoisyRecoveryOverSeeds) {
    for (unsigned seed = 0; seed < 20; ++seed) {
        const auto c = calibrate(oracle::calibration_samples(2.5, 0.45, 500, 0.01, 100 + seed));
        EXPECT_NEAR(c.kappa / 2.5, 1.0, 0.03) << seed;
        EXPECT_NEAR(c.gamma / 0.45, 1.0, 0.03) << seed;
    }
}

TEST(Calibrate, DegenerateShadingIsUnidentifiable) {
    std::vector<CalibrationSample> s(30, {0.4, 0.8, 1.0});
    EXPECT_THROW(calibrate(s), Error);
    EXPECT_THROW(calibrate({{0.4, 0.8, 1.0}}), std::invalid_argument);
    EXPECT_THROW(calibrate({{0.4, 0.8, -1.0}, {0.3, 0.5, 1.0}}), std::invalid_argument);
}

TEST(Calibrate, IterationCapReportsBestIterate) {
    CalibrationOptions o;
    o.max_iterations = 1;
    const auto c = calibrate(oracle::calibration_samples(2.5, 0.45, 200, 0.0, 4), o);
    EXPECT_FALSE(c.converged);
    EXPECT_GT(c.kappa, 0);
    EXPECT_EQ(c.iterations, 1);
}

TEST(Predict, Examples) {
    const IrCalibration c{kPi, 1.0};
    EXPECT_NEAR(predict(c, 1.0, 1.0), 1.0, 1e-12);
    EXPECT_EQ(predict(c, 0.0, 1.0), 0.0);
    const IrCalibration g{1.0, 0.45};
    EXPECT_NEAR(predict(g, 0.5, 2.0) / predict(g, 0.5, 1.0), std::pow(0.25, 0.45), 1e-12);
    EXPECT_THROW(predict(c, 1.0, 0.0), std::invalid_argument);
}

TEST(Predict, MonotoneInShadingAndDistance) {
    const IrCalibration c{0.8, 0.6};
    for (double nl = 0.05; nl < 1.0; nl += 0.05) EXPECT_LE(predict(c, nl, 1.2), predict(c, nl + 0.05, 1.2));
    for (double d = 0.3; d < 3.0; d += 0.1) EXPECT_GE(predict(c, 0.7, d), predict(c, 0.7, d + 0.1));
}
