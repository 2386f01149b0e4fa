#pragma once

// Synthetic RGBD+IR sensor. Renders depth, linear RGB and IR frames of a
// ground-truth scene, and exposes the noiseless diffuse layer as an oracle.

#include "slf/envmap.hpp"
#include "slf/geometry.hpp"
#include "slf/irsample.hpp"
#include "slf/raster.hpp"
#include "slf/raycast.hpp"
#include "slf/specular.hpp"
#include "slf/ward.hpp"

#include <filesystem>
#include <memory>

namespace slf::sim {

struct IrProjector {
    enum class Mode { Dense, Speckle };

    double kappa = 0.5;
    double gamma = 0.5;
    /// Projector center in the IR camera frame.
    Vec3 offset{0.075, 0.0, 0.0};
    Mode mode = Mode::Dense;
    int speckle_period = 3;

    void validate() const;
};

/// Procedural diffuse albedo over world-space positions.
struct TexturePattern {
    enum class Kind { Constant, Checker, Sines, Noise };

    Kind kind = Kind::Constant;
    Rgb a = Rgb::Constant(0.5f);
    Rgb b = Rgb::Constant(0.5f);
    double scale = 0.05;  ///< feature size in meters
    std::uint32_t seed = 1;

    Rgb eval(const Vec3& p) const;
};

struct SceneMaterial {
    std::string name;
    TexturePattern albedo;
    brdf::WardParams ward = brdf::WardParams::iso(0.0, 0.1);
    double ir_rho = 0.5;
    /// World direction projected onto each tangent plane for anisotropic lobes.
    std::optional<Vec3> tangent;

    brdf::TangentFrame frame_at(const Vec3& n) const {
        return tangent ? brdf::TangentFrame::from_tangent(n, *tangent) : brdf::TangentFrame::from_normal(n);
    }
};

struct GroundTruthScene {
    std::string name;
    TriangleMesh mesh;
    std::vector<SceneMaterial> materials;
    std::vector<int> labels;  ///< per vertex, indexes materials
    EnvironmentMap environment;
    IrProjector projector;
    PinholeCamera camera;
    std::vector<Pose> trajectory;  ///< camera-to-world
    int atlas_size = 1024;

    /// Throws std::invalid_argument when labels or materials are inconsistent.
    void validate() const;
    std::vector<int> face_labels() const;
};

struct SensorFrame {
    int index = 0;
    ImageF depth;  ///< meters, 0 = invalid
    ImageRgb rgb;  ///< linear, [0,1]
    ImageF ir;     ///< [0,1]
    Pose true_pose;
    Pose pose;     ///< estimate, identical to true_pose until tracked
};

struct SensorNoise {
    double rgb_sigma = 0.0;
    double ir_sigma = 0.0;
    double depth_sigma = 0.0;
};

struct SimulatorOptions {
    /// Resolution of the map used for the specular term.
    int specular_env_width = 64;
    /// Resolution of the map used for the per-vertex irradiance cache.
    int irradiance_env_width = 32;
    bool shadows = true;
    bool diffuse = true;
    bool specular = true;
    SensorNoise noise;
    std::uint64_t seed = 7;
};

/// Holds the scene together with its acceleration structures and the
/// per-vertex irradiance cache. The scene must outlive the simulator.
class Simulator {
public:
    explicit Simulator(const GroundTruthScene& scene, SimulatorOptions options = {});

    SensorFrame render_frame(const PinholeCamera& camera, const Pose& camera_to_world, int index = 0) const;
    std::vector<SensorFrame> generate_sequence(const std::vector<Pose>& trajectory) const;

    /// Ground-truth diffuse radiance D at a surface point.
    Rgb diffuse_at(int face, const Vec3& bary) const;
    /// Noiseless render of the diffuse layer only (f_s = 0).
    ImageRgb render_diffuse(const PinholeCamera& camera, const Pose& camera_to_world) const;
    /// Ground-truth D texture over the mesh atlas; texels outside charts stay black.
    ImageRgb diffuse_texture(int atlas_size) const;

    const std::vector<Rgb>& vertex_irradiance() const { return irradiance_; }
    const GroundTruthScene& scene() const { return *scene_; }
    const RayCaster& caster() const { return caster_; }
    const SimulatorOptions& options() const { return options_; }

private:
    void compute_irradiance();

    const GroundTruthScene* scene_;
    SimulatorOptions options_;
    RayCaster caster_;
    std::vector<int> face_material_;
    std::vector<Rgb> irradiance_;
    render::SpecularIntegrator specular_;
};

/// Camera poses on a horizontal arc around `center`, all looking at it.
std::vector<Pose> orbit_trajectory(const Vec3& center, double radius, double height, int count, double start_deg,
                                   double span_deg);

// --- IR subsampling -----------------------------------------------------------

struct IrCell {
    int x = 0, y = 0;  ///< pixel holding the cell maximum
    double L = 0;      ///< mean of the maximum and its 4-neighbourhood
};

inline constexpr int kIrCrop = 192;
inline constexpr int kIrCell = 5;

/// Brightest valid-depth pixel of every 5x5 cell in the central 192x192
/// crop. Cells without valid depth produce nothing.
std::vector<IrCell> subsample_ir_cells(const ImageF& ir, const ImageF& depth);

/// Attaches surface geometry to subsampled cells. Normals come from the
/// mesh rendered at `camera_to_world`; positions from the depth image.
std::vector<IrSample> subsample_ir(const ImageF& ir, const ImageF& depth, const PinholeCamera& camera,
                                   const Pose& camera_to_world, const TriangleMesh& mesh,
                                   const std::vector<int>& vertex_labels, const Vec3& projector_offset,
                                   int frame_id);

// --- scene description --------------------------------------------------------

/// Names of the scenes compiled into the library.
std::vector<std::string> builtin_scenes();
/// Builds a bundled scene ("desk", "glossy_plane", ...) or loads a JSON file.
GroundTruthScene load_scene(const std::string& name_or_path);
GroundTruthScene builtin_scene(const std::string& name);
/// Scene from an already parsed JSON document (as text); relative paths
/// resolve against `base_dir`.
GroundTruthScene scene_from_json(const std::string& json_text, const std::filesystem::path& base_dir = {});

}  // namespace slf::sim
