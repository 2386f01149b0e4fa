#include "slf/highlight.hpp"

#include "slf/matseg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace slf::highlight {

void IrlsParams::validate() const {
    if (!(tau >= 0)) throw std::invalid_argument("IRLS tau must be non-negative");
    if (!(v > 0)) throw std::invalid_argument("IRLS v must be positive");
    if (iterations < 1) throw std::invalid_argument("IRLS needs at least one iteration");
}

double irls_weight(double estimate, double q, const IrlsParams& p) {
    const double gate = estimate + p.tau;
    if (q <= gate) return 1.0;
    const double d = (gate - q) / p.v;
    return std::exp(-d * d);
}

double irls_texel(std::span<const WeightedValue> obs, const IrlsParams& p) {
    p.validate();
    double sw = 0, sq = 0;
    for (const auto& o : obs) {
        if (o.w < 0) throw std::invalid_argument("negative observation weight");
        sw += o.w;
        sq += o.w * o.q;
    }
    if (!(sw > 0)) throw std::invalid_argument("IRLS needs an observation with positive weight");
    double est = sq / sw;
    for (int it = 0; it < p.iterations; ++it) {
        double a = 0, b = 0;
        for (const auto& o : obs) {
            const double w = irls_weight(est, o.q, p) * o.w;
            a += w;
            b += w * o.q;
        }
        // mu > 0 keeps a > 0 unless every weight underflows; then keep the estimate
        if (!(a > 0)) break;
        est = b / a;
    }
    return est;
}

Rgb irls_texel(std::span<const texfuse::Observation> obs, const IrlsParams& p, Rgb* mean_out, bool* gated) {
    p.validate();
    Vec3 s = Vec3::Zero();
    double sw = 0;
    for (const auto& o : obs) {
        if (o.weight < 0) throw std::invalid_argument("negative observation weight");
        s += double(o.weight) * o.rgb.cast<double>();
        sw += o.weight;
    }
    if (!(sw > 0)) throw std::invalid_argument("IRLS needs an observation with positive weight");
    const Vec3 mean = s / sw;
    if (mean_out) *mean_out = mean.cast<float>();
    if (gated) *gated = false;
    Vec3 est = mean;
    for (int it = 0; it < p.iterations; ++it) {
        const double grey = 0.299 * est.x() + 0.587 * est.y() + 0.114 * est.z();
        Vec3 b = Vec3::Zero();
        double a = 0;
        for (const auto& o : obs) {
            const double mu = irls_weight(grey, greyscale(o.rgb), p);
            if (mu < 1 && gated && o.weight > 0) *gated = true;
            const double w = mu * o.weight;
            a += w;
            b += w * o.rgb.cast<double>();
        }
        if (!(a > 0)) break;
        est = b / a;
    }
    return est.cast<float>();
}

texfuse::TextureAtlas remove_highlights(const texfuse::TextureAtlas& atlas,
                                        const std::vector<texfuse::Observation>& observations, const IrlsParams& params,
                                        RemovalStats* stats) {
    params.validate();
    const size_t n = atlas.color.size();
    for (const auto& o : observations)
        if (o.texel >= n) throw std::invalid_argument("observation texel outside the atlas");

    // group by texel, keeping the recorded order inside each group
    std::vector<size_t> order(observations.size());
    std::iota(order.begin(), order.end(), size_t(0));
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return observations[a].texel < observations[b].texel; });
    std::vector<texfuse::Observation> sorted(observations.size());
    for (size_t i = 0; i < order.size(); ++i) sorted[i] = observations[order[i]];

    std::vector<size_t> begin(n + 1, 0);
    for (const auto& o : sorted) ++begin[o.texel + 1];
    std::partial_sum(begin.begin(), begin.end(), begin.begin());

    for (size_t t = 0; t < n; ++t)
        if (atlas.observed(int(t)) && begin[t + 1] == begin[t])
            throw MissingObservations("observed texel " + std::to_string(t) +
                                      " has no sidecar observations; fuse with observation recording enabled");

    texfuse::TextureAtlas out = atlas;
    std::vector<unsigned char> single(n, 0), changed(n, 0);
    parallel_for(int(n), 16384, [&](int b, int e) {
        for (int t = b; t < e; ++t) {
            const size_t lo = begin[size_t(t)], hi = begin[size_t(t) + 1];
            if (!atlas.observed(t) || hi == lo) continue;
            if (hi - lo == 1) {
                single[size_t(t)] = 1;
                continue;
            }
            std::span<const texfuse::Observation> obs(sorted.data() + lo, hi - lo);
            Rgb mean;
            bool gated = false;
            const Rgb d = irls_texel(obs, params, &mean, &gated);
            if (!gated) continue;
            out.color.pixels[size_t(t)] = d.cwiseMin(mean);
            changed[size_t(t)] = 1;
        }
    });
    if (stats) {
        *stats = {};
        for (size_t t = 0; t < n; ++t) {
            stats->texels += atlas.observed(int(t));
            stats->single += single[t];
            stats->changed += changed[t];
        }
    }
    return out;
}

std::vector<int> apply_metallic_rule(texfuse::TextureAtlas& diffuse, const std::vector<brdf::MaterialModel>& materials,
                                     const TriangleMesh& mesh, const std::vector<int>& vertex_labels,
                                     const MetallicRule& rule) {
    if (vertex_labels.size() != mesh.vertices.size())
        throw std::invalid_argument("segmentation does not match the mesh");
    std::set<int> metal;
    for (const auto& m : materials)
        if (rule.applies(m)) metal.insert(m.segment);
    if (metal.empty()) return {};
    const auto fl = matseg::face_labels(mesh, vertex_labels);
    for (const auto& s : enumerate_texels(mesh, diffuse.size()))
        if (metal.count(fl[size_t(s.face)])) diffuse.color.pixels[size_t(s.texel)] = Rgb::Zero();
    return {metal.begin(), metal.end()};
}

ImageRgb difference_heatmap(const texfuse::TextureAtlas& before, const texfuse::TextureAtlas& after,
                            double max_difference) {
    if (!before.color.same_size(after.color)) throw std::invalid_argument("heat map atlases differ in size");
    if (!(max_difference > 0)) throw std::invalid_argument("heat map range must be positive");
    ImageRgb out(before.color.width, before.color.height, Rgb::Zero());
    for (size_t i = 0; i < out.size(); ++i) {
        if (before.weight.pixels[i] <= 0) continue;
        const double d = std::abs(greyscale(before.color.pixels[i]) - greyscale(after.color.pixels[i]));
        const double t = std::clamp(d / max_difference, 0.0, 1.0);
        // blue -> cyan -> yellow -> red
        const double r = std::clamp(2.0 * t - 0.5, 0.0, 1.0);
        const double g = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
        const double b = std::clamp(1.0 - 2.0 * t + 0.5, 0.0, 1.0);
        out.pixels[i] = Rgb(float(r), float(g), float(b));
    }
    return out;
}

}  // namespace slf::highlight
