#pragma once

// Frame-to-model camera tracking: point-plane ICP followed by photometric
// refinement on gradient-magnitude images.

#include "slf/geometry.hpp"

#include <Eigen/Core>
#include <filesystem>

namespace slf::tracking {

/// Raised when too few correspondences survive association.
class TrackingLost : public Error {
public:
    using Error::Error;
};

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// exp of a twist (omega, upsilon) with a first-order translation part; used for small increments.
Pose twist_to_pose(const Vec6& xi);

// --- ICP ----------------------------------------------------------------------------

struct IcpOptions {
    double max_distance = 0.05;
    double max_normal_angle_deg = 30.0;
    int max_iterations = 20;
    int min_correspondences = 500;
    double min_update = 1e-9;
    int stride = 2;  ///< live pixel subsampling
    /// Eigenvalue ratio (min / max) below which the normal equations count as rank-deficient.
    double rank_ratio = 1e-6;
};

struct IcpResult {
    Pose pose;  ///< live camera-to-world
    int iterations = 0;
    int correspondences = 0;
    double rms = 0;
    /// Some motion directions were unconstrained (e.g. a single plane); they were left at the initial value.
    bool rank_deficient = false;
};

/// Aligns the live depth map to a model depth map rendered at `model_pose`.
/// `model_normals` are world-frame normals per model pixel (zero = missing).
IcpResult icp_align(const ImageF& live_depth, const ImageF& model_depth, const Image<Vec3f>& model_normals,
                    const PinholeCamera& camera, const Pose& model_pose, const Pose& init,
                    const IcpOptions& options = {});

// --- photometric refinement --------------------------------------------------------------

enum class Objective {
    GradientMagnitude,  ///< |grad R| - |grad I| of greyscale images
    RawIntensity,       ///< R - I of greyscale images (baseline)
};

struct PhotometricOptions {
    Objective objective = Objective::GradientMagnitude;
    int levels = 3;
    int max_iterations = 10;  ///< per level
    double reject = 0.2;      ///< absolute residuals above this are ignored
    double min_update = 1e-6;
    double min_valid_fraction = 0.2;
};

struct PhotometricResult {
    Pose pose;  ///< live camera-to-world
    bool diverged = false;  ///< cost rose on the finest level; pose is the initial one
    int iterations = 0;
    double initial_cost = 0, final_cost = 0;
    int valid_pixels = 0;
    /// Costs of the accepted iterates per level, coarsest first; each starts with the level's initial cost.
    std::vector<std::vector<double>> level_costs;
};

/// Greyscale Sobel gradient magnitude, normalized to intensity per pixel.
ImageF gradient_magnitude(const ImageF& grey);
/// [1 4 6 4 1]/16 blur followed by 2x2 averaging; matches PinholeCamera::scaled(0.5).
ImageF downsample(const ImageF& img);
/// 2x2 average of valid depths; a coarse pixel is valid when all four children are valid and agree within `tol`.
ImageF downsample_depth(const ImageF& depth, double tol = 0.05);

/// One pyramid level of the photometric problem. The unknown is the relative
/// transform T_rel mapping reference camera coordinates into live camera
/// coordinates; the live pose is T_ref * T_rel^{-1}.
class PhotometricLevel {
public:
    PhotometricLevel(const ImageF& live_grey, const ImageF& ref_grey, const ImageF& ref_depth, const Mask& ref_valid,
                     const PinholeCamera& camera, Objective objective, double reject);

    /// Mean truncated cost min(r^2, reject^2) over pixels that land inside the live image.
    double cost(const Pose& T_rel) const;
    /// Accumulates J^T J and J^T r over inlier residuals for a left increment exp(xi) T_rel.
    double normal_equations(const Pose& T_rel, Mat6& H, Vec6& g, int& inliers) const;
    /// Residual and analytic Jacobian of one reference pixel; false when it is unusable.
    bool residual(const Pose& T_rel, int index, double& r, Vec6* J) const;

    int pixel_count() const { return int(points_.size()); }
    const PinholeCamera& camera() const { return camera_; }

private:
    PinholeCamera camera_;
    ImageF live_;                  // target image (gradient magnitude or greyscale)
    std::vector<Vec3> points_;     // reference camera frame
    std::vector<double> values_;   // reference image values
    double reject_;
};

PhotometricResult photometric_refine(const ImageRgb& live, const ImageRgb& prediction, const ImageF& prediction_depth,
                                     const Mask& prediction_valid, const PinholeCamera& camera, const Pose& reference_pose,
                                     const Pose& init, const PhotometricOptions& options = {});

// --- trajectory IO ---------------------------------------------------------------------

struct TrajectoryEntry {
    int frame = 0;
    Pose pose;
};

/// JSON lines: {"frame": i, "R": [row-major 9], "t": [3]}.
void write_trajectory(const std::filesystem::path& path, const std::vector<TrajectoryEntry>& poses);
std::vector<TrajectoryEntry> read_trajectory(const std::filesystem::path& path);

/// Translation (meters) and rotation (radians) error between two poses.
struct PoseError {
    double translation = 0;
    double rotation = 0;
};
PoseError pose_error(const Pose& estimate, const Pose& truth);

}  // namespace slf::tracking
