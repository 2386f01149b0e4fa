#pragma once

// Per-segment Ward fit from IR samples, BRDF slices and tangent recovery.

#include "slf/ircalib.hpp"
#include "slf/irsample.hpp"
#include "slf/ward.hpp"

#include <Eigen/Core>
#include <filesystem>

namespace slf::brdf {

enum class AlbedoMode { PerPoint, Constant };

enum class FitStatus {
    Converged,
    MaxIterations,  ///< best iterate returned
    DiffuseOnly,    ///< no sample near the specular lobe; beta left unconstrained
};

const char* to_string(FitStatus s);

struct FitOptions {
    AlbedoMode mode = AlbedoMode::PerPoint;
    bool isotropic = true;
    /// Required for anisotropic fits; the tangent is transported to each sample normal.
    std::optional<TangentFrame> frame;
    int max_iterations = 100;
    double lambda0 = 1e-3;
    double relative_tolerance = 1e-10;
    double saturation = 0.999;
    /// Samples whose half-angle exceeds this carry no specular information.
    double specular_cutoff_deg = 60.0;
    int min_samples = 20;
};

struct FitResult {
    MaterialModel model;
    FitStatus status = FitStatus::Converged;
    int iterations = 0;
    double cost = 0;
    /// Per-point albedo keyed by IrSample::point_id (a single entry with id -1 in constant mode).
    std::vector<int> point_ids;
    std::vector<double> point_rho;
};

/// Least-squares objective of one segment:
///   sum_i (L_i - (kappa (n.l)/d^2 (rho(x_i)/pi + f_s(v, l; beta)))^gamma)^2.
/// Unknowns are packed as [rho_s, log alpha (x, y)..., rho_0, ..., rho_{G-1}].
class SegmentProblem {
public:
    SegmentProblem(const std::vector<IrSample>& samples, const ircalib::IrCalibration& calib, const FitOptions& options);

    int beta_size() const { return isotropic_ ? 2 : 3; }
    int groups() const { return int(group_ids_.size()); }
    int size() const { return beta_size() + groups(); }
    int sample_count() const { return int(samples_.size()); }
    const std::vector<int>& group_ids() const { return group_ids_; }

    Eigen::VectorXd pack(const WardParams& w, const std::vector<double>& rho) const;
    WardParams unpack_ward(const Eigen::VectorXd& x) const;

    /// Residuals r_i = L_i - model_i and, optionally, the dense Jacobian dr/dx.
    void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J = nullptr) const;
    double cost(const Eigen::VectorXd& x) const;

    /// Normal equations in arrowhead form: B (beta block), C (beta x group), D (diagonal).
    struct Normal {
        Eigen::MatrixXd B, C;
        Eigen::VectorXd D, g_beta, g_rho;
        double cost = 0;
    };
    Normal normal_equations(const Eigen::VectorXd& x) const;

    /// Closed-form start: grid search over roughness with a linear solve for
    /// (rho, rho_s) in the inverse-gamma domain.
    Eigen::VectorXd initial_guess() const;
    /// Same linear solve with rho_s = 0; used when no specular signal exists.
    Eigen::VectorXd diffuse_only() const;

    bool has_specular_signal(double cutoff_deg) const;

private:
    struct Item {
        double L, shading;  // shading = kappa (n.l) / d^2
        int group;
        TangentFrame frame;
        Vec3 v, l;
    };
    Eigen::VectorXd linear_solve(const WardParams& w, bool with_specular) const;

    std::vector<Item> samples_;
    std::vector<int> group_ids_;
    double kappa_, gamma_;
    bool isotropic_;
};

/// Fits beta and rho for one segment with bounded Levenberg-Marquardt; the
/// per-point albedos are eliminated through the Schur complement of the
/// arrowhead normal equations. Throws std::invalid_argument on unmet
/// preconditions.
FitResult fit_segment(const std::vector<IrSample>& samples, const ircalib::IrCalibration& calib,
                      const FitOptions& options = {});

// --- BRDF slices and tangents ----------------------------------------------------

struct BrdfSlice {
    int size = 129;
    double radius = 0.7;  ///< tangential half-extent
    Vec3 reference_normal = Vec3::UnitZ();
    Vec3 axis_u = Vec3::UnitX(), axis_v = Vec3::UnitY();  ///< slice basis spanning the plane orthogonal to n_R
    ImageF value;   ///< smoothed intensity
    Mask valid;
    double coverage = 0;  ///< valid fraction of the central disc

    double cell() const { return 2.0 * radius / (size - 1); }
    /// Continuous cell coordinates of a tangential position.
    Vec2 to_grid(const Vec2& uv) const { return (uv + Vec2::Constant(radius)) / cell(); }
    Vec2 to_plane(const Vec2& grid) const { return grid * cell() - Vec2::Constant(radius); }
};

struct SliceOptions {
    int size = 129;
    double radius = 0.7;
    double sigma_cells = 2.0;
    /// Cells with smoothed splat weight below this are empty.
    double min_weight = 0.01;
    /// Disc (tangential radius) over which coverage is measured.
    double coverage_radius = 0.25;
    double min_coverage = 0.5;
    int min_samples = 100;
};

/// Thrown when the slice leaves too much of the lobe region empty.
class InsufficientViews : public Error {
public:
    using Error::Error;
};
/// Thrown when the slice is (nearly) circularly symmetric.
class TangentUndetermined : public Error {
public:
    using Error::Error;
};

/// Splats transported half-vectors Proj(n_R + h - n) of every sample into a
/// tangent-plane grid and smooths it. With a calibration the splatted value
/// is the reflectance L^(1/gamma) / (kappa (n.l)/d^2) instead of raw L.
BrdfSlice build_brdf_slice(const std::vector<IrSample>& samples, const ircalib::IrCalibration* calib = nullptr,
                           const SliceOptions& options = {});

/// Tangential position Proj_{n_R}(n_R + h - n) of a sample in the slice basis.
Vec2 slice_position(const BrdfSlice& slice, const IrSample& sample);

/// Negative mean squared difference between the slice and its mirror image
/// about the axis at angle phi (radians, in the slice basis).
double symmetry_score(const BrdfSlice& slice, double phi);

struct TangentOptions {
    double scan_step_deg = 2.0;
    /// Score spread over the scan, relative to the slice variance, below which the tangent is undetermined.
    double flatness = 0.02;
};

/// Nelder-Mead over the mirror axis angle; returns a frame whose tangent is
/// the wider lobe axis (alpha_x >= alpha_y).
TangentFrame fit_tangent(const BrdfSlice& slice, const TangentOptions& options = {});
/// Angle of a frame's tangent in the slice basis, in [0, pi).
double tangent_angle(const BrdfSlice& slice, const Vec3& tangent);

// --- serialization ------------------------------------------------------------------

void write_materials(const std::filesystem::path& path, const std::vector<MaterialModel>& materials);
std::vector<MaterialModel> read_materials(const std::filesystem::path& path);

}  // namespace slf::brdf
