#pragma once

// Weighted fusion of RGB frames into the texture atlas and atlas-based
// appearance prediction.

#include "slf/raster.hpp"

#include <filesystem>

namespace slf::texfuse {

/// Per-texel running weighted mean of RGB observations.
struct TextureAtlas {
    ImageRgb color;
    ImageF weight;  ///< cumulative weight; 0 marks an unobserved texel

    TextureAtlas() = default;
    explicit TextureAtlas(int size) : color(size, size, Rgb::Zero()), weight(size, size, 0.0f) {}

    int size() const { return color.width; }
    bool observed(std::uint32_t texel) const { return weight.pixels[texel] > 0; }
    size_t observed_count() const;

    /// Writes <stem>.pfm (color), <stem>_weight.pfm and a <stem>.png preview.
    void save(const std::filesystem::path& stem) const;
    static TextureAtlas load(const std::filesystem::path& stem);
};

struct FusionParams {
    double sigma_m = 0.1;   ///< motion factor scale
    double delta_z = 0.02;  ///< depth discontinuity threshold, meters
    /// Texel visibility tolerance against the rendered depth; 0 selects 2 delta_z.
    double depth_test = 0.0;

    double visibility_epsilon() const { return depth_test > 0 ? depth_test : 2.0 * delta_z; }
    void validate() const;
};

struct FusionWeights {
    double m = 1.0;  ///< motion factor of the whole frame
    Mask z;          ///< 0 on depth discontinuities
    ImageF s;        ///< (n.v) / Z^2

    double at(int x, int y) const { return m * z(x, y) * s(x, y); }
};

/// m = exp(-(|dt|^2 + |dr|^2) / sigma_m^2), with dr the axis-angle of the
/// relative rotation. Normals default to depth-derived ones; pass
/// camera-frame normals (zero = missing) to use the mesh instead.
FusionWeights compute_weights(const ImageF& depth, const PinholeCamera& camera, const Pose& pose_prev,
                              const Pose& pose_cur, const FusionParams& params = {},
                              const Image<Vec3f>* normals_camera = nullptr);

double motion_factor(const Pose& prev, const Pose& cur, double sigma_m);

/// One fused texel observation, as stored in the sidecar stream.
struct Observation {
    std::uint32_t texel = 0;
    std::uint32_t frame = 0;
    Rgb rgb = Rgb::Zero();
    float weight = 0;
};

/// Projects every texel into the frame, keeps those passing the depth test
/// and blends the bilinearly sampled color into the running mean. Appends
/// the contributing observations when `observations` is given.
void fuse_frame(TextureAtlas& atlas, const ImageRgb& rgb, const FusionWeights& weights, const PinholeCamera& camera,
                const Pose& pose, const TriangleMesh& mesh, const std::vector<TexelSample>& texels, int frame_id,
                const FusionParams& params = {}, std::vector<Observation>* observations = nullptr);

/// Sequential fuser that owns the texel list and the previous pose.
class Fuser {
public:
    Fuser(const TriangleMesh& mesh, int atlas_size, const PinholeCamera& camera, const FusionParams& params = {});

    /// Weights from the mesh rendered at `pose` and the frame's depth.
    void add(const ImageRgb& rgb, const ImageF& depth, const Pose& pose, int frame_id,
             std::vector<Observation>* observations = nullptr);

    const TextureAtlas& atlas() const { return atlas_; }
    TextureAtlas& atlas() { return atlas_; }
    const std::vector<TexelSample>& texels() const { return texels_; }

private:
    const TriangleMesh* mesh_;
    PinholeCamera camera_;
    FusionParams params_;
    TextureAtlas atlas_;
    std::vector<TexelSample> texels_;
    std::optional<Pose> prev_;
};

// --- sidecar ----------------------------------------------------------------------

/// 24-byte little-endian records: texel u32, frame u32, rgb 3 x f32, weight f32.
void write_observations(const std::filesystem::path& path, const std::vector<Observation>& obs, bool append = false);
std::vector<Observation> read_observations(const std::filesystem::path& path);

// --- prediction ----------------------------------------------------------------------

struct Prediction {
    ImageRgb color;
    ImageF depth;          ///< camera-frame z, 0 where empty
    Image<Vec3f> normal;   ///< world frame
    Mask valid;            ///< covered by the mesh and by observed texels
    SurfaceMap surface;
};

/// Atlas lookup at a chart coordinate, normalized over observed bilinear
/// taps. Returns false when no tap is observed.
bool sample_atlas(const TextureAtlas& atlas, const Vec2& uv, Rgb& out);

Prediction render_prediction(const TextureAtlas& atlas, const TriangleMesh& mesh, const PinholeCamera& camera,
                             const Pose& pose);

}  // namespace slf::texfuse
