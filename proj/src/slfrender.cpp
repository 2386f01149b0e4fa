#include "slf/slfrender.hpp"

#include "slf/matseg.hpp"
#include "slf/raster.hpp"

#include <algorithm>
#include <cmath>

namespace slf::render {

void SlfModel::validate() const {
    if (mesh.uv_charts.size() != mesh.faces.size()) throw std::invalid_argument("model mesh has no atlas parameterization");
    if (vertex_labels.size() != mesh.vertices.size()) throw std::invalid_argument("segmentation does not match the mesh");
    std::vector<char> have;
    for (const auto& m : materials) {
        if (m.segment < 0) throw std::invalid_argument("negative material segment id");
        if (size_t(m.segment) >= have.size()) have.resize(size_t(m.segment) + 1, 0);
        have[size_t(m.segment)] = 1;
    }
    for (int l : matseg::face_labels(mesh, vertex_labels))
        if (l < 0 || size_t(l) >= have.size() || !have[size_t(l)])
            throw std::invalid_argument("segment " + std::to_string(l) + " has no material entry");
}

const brdf::MaterialModel& SlfModel::material_of_face(int face) const {
    return materials[size_t(material_index_[size_t(face_labels_[size_t(face)])])];
}

namespace {

EnvironmentMap integration_map(const EnvironmentMap& env, int width) {
    if (env.width() <= width) return env;
    EnvironmentMap out = env.downsampled(width);
    out.set_rotation(env.rotation());
    return out;
}

}  // namespace

SlfRenderer::SlfRenderer(SlfModel model, const RenderOptions& options)
    : model_(std::move(model)),
      options_(options),
      integrator_(integration_map(model_.environment, options.env_width), options.quadrature) {
    model_.validate();
    model_.face_labels_ = matseg::face_labels(model_.mesh, model_.vertex_labels);
    int max_segment = 0;
    for (const auto& m : model_.materials) max_segment = std::max(max_segment, m.segment);
    model_.material_index_.assign(size_t(max_segment) + 1, -1);
    for (size_t i = 0; i < model_.materials.size(); ++i) model_.material_index_[size_t(model_.materials[i].segment)] = int(i);
}

Rgb SlfRenderer::specular(const brdf::MaterialModel& material, const Vec3& n, const Vec3& wo) const {
    if (!options_.specular || material.ward.rho_s <= 0 || n.dot(wo) <= 0) return Rgb::Zero();
    return integrator_.eval(material.shading_frame(n), material.ward, wo);
}

RenderResult SlfRenderer::render(const PinholeCamera& camera, const Pose& pose) const {
    camera.validate();
    pose.validate();
    texfuse::Prediction pred = texfuse::render_prediction(model_.diffuse, model_.mesh, camera, pose);
    RenderResult out;
    out.color = std::move(pred.color);
    out.coverage = std::move(pred.valid);
    out.depth = std::move(pred.depth);
    out.surface = Mask(camera.width, camera.height, 0);
    const auto& map = pred.surface;
    const Vec3 eye = pose.t;
    parallel_for(camera.height, 4, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < camera.width; ++x) {
                const int f = map.face(x, y);
                if (f < 0) continue;
                out.surface(x, y) = 1;
                const Vec3 bary = map.bary(x, y).cast<double>();
                const Vec3 p = model_.mesh.point_at(f, bary);
                const Vec3 n = model_.mesh.normal_at(f, bary);
                const Vec3 wo = (eye - p).normalized();
                out.color(x, y) += specular(model_.material_of_face(f), n, wo);
            }
    });
    return out;
}

RenderResult render_view(const SlfModel& model, const PinholeCamera& camera, const Pose& pose,
                         const RenderOptions& options) {
    return SlfRenderer(model, options).render(camera, pose);
}

ImageRgb display_image(const ImageRgb& linear, double gamma) {
    if (!(gamma > 0)) throw std::invalid_argument("display gamma must be positive");
    ImageRgb out(linear.width, linear.height);
    for (size_t i = 0; i < linear.size(); ++i)
        for (int c = 0; c < 3; ++c)
            out.pixels[i][c] = float(std::pow(std::clamp(double(linear.pixels[i][c]), 0.0, 1.0), 1.0 / gamma));
    return out;
}

}  // namespace slf::render
