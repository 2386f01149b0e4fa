#pragma once

// Virtual rephotography: compare renders of the reconstruction against the
// sensor images of held-out views.

#include "slf/core.hpp"

#include <array>
#include <string>

namespace slf::eval {

inline constexpr std::array<int, 3> kPatchSizes{3, 5, 7};

/// Root-mean-square difference of two greyscale images over the mask.
/// Throws std::invalid_argument on size mismatch or an empty mask.
double rmse(const ImageF& rendered, const ImageF& truth, const Mask& mask);
double rmse(const ImageRgb& rendered, const ImageRgb& truth, const Mask& mask);

/// 1 - mean NCC over every patch centered on a masked pixel. Patches that
/// leave the image or touch an unmasked pixel are skipped, as are patches
/// with zero variance in either image. Throws slf::Error when none remain.
double one_minus_ncc(const ImageF& rendered, const ImageF& truth, const Mask& mask, int patch);
double one_minus_ncc(const ImageRgb& rendered, const ImageRgb& truth, const Mask& mask, int patch);

struct ViewError {
    int frame = 0;
    double rmse = 0;
    std::array<double, 3> one_minus_ncc{};  ///< patch 3, 5, 7
    double valid_fraction = 0;              ///< compared pixels over image pixels
};

/// Clamps the render to [0,1] before comparing, as the sensor image is.
ViewError evaluate_view(const ImageRgb& rendered, const ImageRgb& truth, const Mask& mask, int frame);

struct EvalReport {
    std::string method;
    std::vector<ViewError> views;

    double mean_rmse() const;
    double mean_ncc(size_t patch_index) const;
    double mean_valid_fraction() const;
};

std::string to_json(const std::vector<EvalReport>& reports);
std::vector<EvalReport> reports_from_json(const std::string& text);

/// Metrics as rows and methods as columns.
std::string format_table(const std::vector<EvalReport>& reports);

}  // namespace slf::eval
