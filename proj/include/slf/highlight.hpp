#pragma once

// Highlight removal: a robust min-composite over per-frame texel observations
// by iteratively reweighted least squares, and the zero-diffuse rule for metals.

#include "slf/texfuse.hpp"
#include "slf/ward.hpp"

#include <span>

namespace slf::highlight {

struct IrlsParams {
    double tau = 0.03;  ///< gate offset above the current estimate
    double v = 0.05;    ///< falloff width of the down-weighting
    int iterations = 2;

    void validate() const;
};

/// Down-weighting factor for observation q given the current estimate: 1 on and below the gate.
double irls_weight(double estimate, double q, const IrlsParams& params);

struct WeightedValue {
    double q = 0;
    double w = 0;
};

/// Scalar IRLS starting from the plain weighted mean.
double irls_texel(std::span<const WeightedValue> observations, const IrlsParams& params);

/// Color version: the gate runs on greyscale intensity and the resulting
/// multipliers are shared by all three channels. Returns the plain weighted
/// mean in `mean` when it is non-null, and sets `gated` when any observation
/// was down-weighted.
Rgb irls_texel(std::span<const texfuse::Observation> observations, const IrlsParams& params, Rgb* mean = nullptr,
               bool* gated = nullptr);

/// Raised when an observed texel has no entries in the observation sidecar.
class MissingObservations : public Error {
public:
    using Error::Error;
};

struct RemovalStats {
    long texels = 0;          ///< observed texels
    long single = 0;          ///< texels with one observation, passed through
    long changed = 0;         ///< texels where some observation was down-weighted
};

/// Returns the diffuse atlas D. Texels with a single observation, or where no
/// observation crossed the gate, keep their fused color. Elsewhere D is the
/// IRLS estimate, clamped per channel to the plain weighted mean.
texfuse::TextureAtlas remove_highlights(const texfuse::TextureAtlas& atlas,
                                        const std::vector<texfuse::Observation>& observations,
                                        const IrlsParams& params = {}, RemovalStats* stats = nullptr);

struct MetallicRule {
    double max_diffuse = 0.03;   ///< IR diffuse albedo below this ...
    double min_specular = 0.15;  ///< ... with specular albedo above this marks a metal
    bool applies(const brdf::MaterialModel& m) const { return m.rho < max_diffuse && m.ward.rho_s > min_specular; }
};

/// Sets D to zero on every texel whose face belongs to a metallic segment.
/// `vertex_labels` is the per-vertex segmentation. Returns the zeroed segment ids.
std::vector<int> apply_metallic_rule(texfuse::TextureAtlas& diffuse, const std::vector<brdf::MaterialModel>& materials,
                                     const TriangleMesh& mesh, const std::vector<int>& vertex_labels,
                                     const MetallicRule& rule = {});

/// Greyscale |before - after| mapped through a blue-to-red ramp; `max_difference` maps to red.
ImageRgb difference_heatmap(const texfuse::TextureAtlas& before, const texfuse::TextureAtlas& after,
                            double max_difference = 0.25);

}  // namespace slf::highlight
