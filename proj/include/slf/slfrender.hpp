#pragma once

// Novel-view rendering of a reconstructed surface light field: diffuse texture
// from the atlas plus a Ward specular term integrated against an environment map.

#include "slf/envmap.hpp"
#include "slf/specular.hpp"
#include "slf/texfuse.hpp"
#include "slf/ward.hpp"

namespace slf::render {

struct SlfModel {
    TriangleMesh mesh;  ///< with atlas parameterization
    texfuse::TextureAtlas diffuse;
    std::vector<int> vertex_labels;  ///< per-vertex segment ids
    std::vector<brdf::MaterialModel> materials;
    EnvironmentMap environment;  ///< rotation() registers it in the world

    /// Throws unless every segment used by a face has a material entry.
    void validate() const;
    /// Material of a face, by majority label of its vertices.
    const brdf::MaterialModel& material_of_face(int face) const;

private:
    friend class SlfRenderer;
    std::vector<int> face_labels_;
    std::vector<int> material_index_;  // by segment id
};

struct RenderOptions {
    int env_width = 64;  ///< the environment is box-filtered to this width before integration
    bool specular = true;
    SpecularOptions quadrature;
};

struct RenderResult {
    ImageRgb color;  ///< linear, unclamped
    Mask coverage;   ///< surface pixels that found atlas data
    Mask surface;    ///< pixels covered by the mesh
    ImageF depth;
};

/// Holds the downsampled environment and its quadrature across many views.
class SlfRenderer {
public:
    explicit SlfRenderer(SlfModel model, const RenderOptions& options = {});

    RenderResult render(const PinholeCamera& camera, const Pose& camera_to_world) const;
    /// S at a surface point with normal n seen from direction wo (unit, pointing away from the surface).
    Rgb specular(const brdf::MaterialModel& material, const Vec3& n, const Vec3& wo) const;

    const SlfModel& model() const { return model_; }

private:
    SlfModel model_;
    RenderOptions options_;
    SpecularIntegrator integrator_;
};

/// One-off convenience wrapper.
RenderResult render_view(const SlfModel& model, const PinholeCamera& camera, const Pose& camera_to_world,
                         const RenderOptions& options = {});

/// Clamp to [0,1] and apply display gamma, for PNG previews.
ImageRgb display_image(const ImageRgb& linear, double gamma = 2.2);

}  // namespace slf::render
