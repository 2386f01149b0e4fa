#include "slf/sensorsim.hpp"

#include "slf/io.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace slf::sim {

using nlohmann::json;

void IrProjector::validate() const {
    if (!(kappa > 0)) throw std::invalid_argument("projector kappa must be positive");
    if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("projector gamma must lie in (0, 1]");
    if (speckle_period < 1) throw std::invalid_argument("speckle period must be >= 1");
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double lattice(std::uint32_t seed, std::int64_t x, std::int64_t y, std::int64_t z) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ std::uint64_t(x));
    h = mix64(h ^ std::uint64_t(y));
    h = mix64(h ^ std::uint64_t(z));
    return double(h >> 11) * (1.0 / 9007199254740992.0);
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

double value_noise(std::uint32_t seed, const Vec3& p) {
    const Vec3 f = p.array().floor();
    const Vec3 r = p - f;
    const auto ix = std::int64_t(f.x()), iy = std::int64_t(f.y()), iz = std::int64_t(f.z());
    const double sx = smooth(r.x()), sy = smooth(r.y()), sz = smooth(r.z());
    double acc = 0;
    for (int k = 0; k < 8; ++k) {
        const int dx = k & 1, dy = (k >> 1) & 1, dz = (k >> 2) & 1;
        const double w = (dx ? sx : 1 - sx) * (dy ? sy : 1 - sy) * (dz ? sz : 1 - sz);
        acc += w * lattice(seed, ix + dx, iy + dy, iz + dz);
    }
    return acc;
}

}  // namespace

Rgb TexturePattern::eval(const Vec3& p) const {
    double t = 0;
    switch (kind) {
        case Kind::Constant:
            return a;
        case Kind::Checker: {
            // offset keeps points lying on a lattice plane on one side
            const Vec3 q = p / scale + Vec3::Constant(1e-6);
            const auto s = std::int64_t(std::floor(q.x())) + std::int64_t(std::floor(q.y())) +
                           std::int64_t(std::floor(q.z()));
            t = (s & 1) ? 1.0 : 0.0;
            break;
        }
        case Kind::Sines: {
            const Vec3 q = p * (2.0 * kPi / scale);
            t = 0.5 + 0.25 * std::sin(q.x() + 0.3 * q.z()) + 0.25 * std::sin(0.8 * q.y() + 0.6 * q.z() + 1.0);
            break;
        }
        case Kind::Noise: {
            const Vec3 q = p / scale;
            t = (2.0 * value_noise(seed, q) + value_noise(seed + 1, 2.0 * q)) / 3.0;
            break;
        }
    }
    const auto tf = float(std::clamp(t, 0.0, 1.0));
    return a * (1.0f - tf) + b * tf;
}

void GroundTruthScene::validate() const {
    mesh.validate();
    projector.validate();
    camera.validate();
    if (materials.empty()) throw std::invalid_argument("scene has no materials");
    if (labels.size() != mesh.vertices.size()) throw std::invalid_argument("every vertex needs a material label");
    for (int l : labels)
        if (l < 0 || l >= int(materials.size())) throw std::invalid_argument("vertex label without a material");
    for (const auto& m : materials)
        if (m.ir_rho < 0) throw std::invalid_argument("IR albedo must be non-negative");
}

std::vector<int> GroundTruthScene::face_labels() const {
    std::vector<int> out(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& t = mesh.faces[f];
        const int a = labels[size_t(t[0])], b = labels[size_t(t[1])], c = labels[size_t(t[2])];
        out[f] = (b == c) ? b : a;
    }
    return out;
}

// --- simulator ----------------------------------------------------------------

Simulator::Simulator(const GroundTruthScene& scene, SimulatorOptions options)
    : scene_(&scene),
      options_(options),
      caster_(scene.mesh),
      face_material_(scene.face_labels()),
      specular_(scene.environment.width() > options.specular_env_width
                    ? scene.environment.downsampled(options.specular_env_width)
                    : scene.environment) {
    scene.validate();
    compute_irradiance();
}

void Simulator::compute_irradiance() {
    const EnvironmentMap env = scene_->environment.width() > options_.irradiance_env_width
                                   ? scene_->environment.downsampled(options_.irradiance_env_width)
                                   : scene_->environment;
    const auto texels = env.texels();
    const auto& mesh = scene_->mesh;
    irradiance_.assign(mesh.vertices.size(), Rgb::Zero());
    parallel_for(int(mesh.vertices.size()), 64, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            const Vec3& n = mesh.normals[size_t(i)];
            const Vec3 origin = mesh.vertices[size_t(i)] + 1e-4 * n;
            Rgb e = Rgb::Zero();
            for (const auto& t : texels) {
                const double c = n.dot(t.dir);
                if (c <= 0) continue;
                if (options_.shadows && caster_.occluded(origin, t.dir)) continue;
                e += t.radiance * float(c * t.solid_angle);
            }
            irradiance_[size_t(i)] = e;
        }
    });
}

Rgb Simulator::diffuse_at(int face, const Vec3& bary) const {
    const auto& mesh = scene_->mesh;
    const auto& tri = mesh.faces[size_t(face)];
    Rgb e = Rgb::Zero();
    for (int k = 0; k < 3; ++k) e += irradiance_[size_t(tri[size_t(k)])] * float(bary[k]);
    const Rgb albedo = scene_->materials[size_t(face_material_[size_t(face)])].albedo.eval(mesh.point_at(face, bary));
    return (albedo.array() * e.array()).matrix() / float(kPi);
}

SensorFrame Simulator::render_frame(const PinholeCamera& camera, const Pose& pose, int index) const {
    pose.validate();
    const auto& scene = *scene_;
    const auto& proj = scene.projector;
    const SurfaceMap map = rasterize(scene.mesh, camera, pose);
    SensorFrame frame;
    frame.index = index;
    frame.true_pose = pose;
    frame.pose = pose;
    frame.depth = map.depth;
    frame.rgb = ImageRgb(camera.width, camera.height, Rgb::Zero());
    frame.ir = ImageF(camera.width, camera.height, 0.0f);
    const Vec3 eye = pose.t;
    const Vec3 projector = pose * proj.offset;

    parallel_for(camera.height, 4, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = 0; x < camera.width; ++x) {
                const int f = map.face(x, y);
                if (f < 0) continue;
                const Vec3 bary = map.bary(x, y).cast<double>();
                const Vec3 p = scene.mesh.point_at(f, bary);
                const Vec3 n = scene.mesh.normal_at(f, bary);
                const Vec3 v = (eye - p).normalized();
                const auto& mat = scene.materials[size_t(face_material_[size_t(f)])];
                const brdf::TangentFrame tf = mat.frame_at(n);
                Rgb c = Rgb::Zero();
                if (options_.diffuse) c += diffuse_at(f, bary);
                if (options_.specular && mat.ward.rho_s > 0) c += specular_.eval(tf, mat.ward, v);
                frame.rgb(x, y) = c.cwiseMax(0.0f).cwiseMin(1.0f);

                const Vec3 lv = projector - p;
                const double d = lv.norm();
                const Vec3 l = lv / d;
                const double nl = n.dot(l);
                if (nl <= 0 || n.dot(v) <= 0) continue;
                const double fs = brdf::ward_eval(mat.ward, tf, v, l);
                const double arg = proj.kappa * nl / (d * d) * (mat.ir_rho / kPi + fs);
                frame.ir(x, y) = float(std::clamp(std::pow(arg, proj.gamma), 0.0, 1.0));
            }
        }
    });

    if (proj.mode == IrProjector::Mode::Speckle) {
        const int P = proj.speckle_period;
        for (int by = 0; by < camera.height; by += P) {
            for (int bx = 0; bx < camera.width; bx += P) {
                const std::uint64_t h = mix64(mix64(options_.seed ^ 0x5bd1e995ULL) ^ std::uint64_t(index) * 0x1000193ULL ^
                                              (std::uint64_t(by) << 32) ^ std::uint64_t(bx));
                const int lit = int(h % std::uint64_t(P * P));
                for (int y = by; y < std::min(by + P, camera.height); ++y)
                    for (int x = bx; x < std::min(bx + P, camera.width); ++x)
                        if ((y - by) * P + (x - bx) != lit) frame.ir(x, y) = 0.0f;
            }
        }
    }

    const auto& noise = options_.noise;
    if (noise.rgb_sigma > 0 || noise.ir_sigma > 0 || noise.depth_sigma > 0) {
        std::mt19937_64 rng(mix64(options_.seed) ^ mix64(std::uint64_t(index) + 1));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (size_t i = 0; i < frame.depth.size(); ++i) {
            if (frame.depth.pixels[i] <= 0) continue;
            if (noise.rgb_sigma > 0)
                for (int c = 0; c < 3; ++c)
                    frame.rgb.pixels[i][c] =
                        float(std::clamp(frame.rgb.pixels[i][c] + noise.rgb_sigma * gauss(rng), 0.0, 1.0));
            if (noise.ir_sigma > 0)
                frame.ir.pixels[i] = float(std::clamp(frame.ir.pixels[i] + noise.ir_sigma * gauss(rng), 0.0, 1.0));
            if (noise.depth_sigma > 0)
                frame.depth.pixels[i] = float(std::max(1e-3, frame.depth.pixels[i] + noise.depth_sigma * gauss(rng)));
        }
    }
    return frame;
}

std::vector<SensorFrame> Simulator::generate_sequence(const std::vector<Pose>& trajectory) const {
    if (trajectory.empty()) throw std::invalid_argument("trajectory is empty");
    std::vector<SensorFrame> frames;
    frames.reserve(trajectory.size());
    for (size_t i = 0; i < trajectory.size(); ++i) frames.push_back(render_frame(scene_->camera, trajectory[i], int(i)));
    return frames;
}

ImageRgb Simulator::render_diffuse(const PinholeCamera& camera, const Pose& pose) const {
    const SurfaceMap map = rasterize(scene_->mesh, camera, pose);
    ImageRgb out(camera.width, camera.height, Rgb::Zero());
    parallel_for(camera.height, 8, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < camera.width; ++x)
                if (map.face(x, y) >= 0)
                    out(x, y) = diffuse_at(map.face(x, y), map.bary(x, y).cast<double>()).cwiseMin(1.0f);
    });
    return out;
}

ImageRgb Simulator::diffuse_texture(int atlas_size) const {
    ImageRgb out(atlas_size, atlas_size, Rgb::Zero());
    const auto texels = enumerate_texels(scene_->mesh, atlas_size);
    parallel_for(int(texels.size()), 4096, [&](int b, int e) {
        for (int i = b; i < e; ++i) {
            const auto& t = texels[size_t(i)];
            // clamp dilated barycentrics back onto the triangle
            Vec3 bary = t.bary.cwiseMax(0.0);
            bary /= bary.sum();
            out.pixels[t.texel] = diffuse_at(t.face, bary).cwiseMin(1.0f);
        }
    });
    return out;
}

std::vector<Pose> orbit_trajectory(const Vec3& center, double radius, double height, int count, double start_deg,
                                   double span_deg) {
    if (count <= 0) throw std::invalid_argument("orbit needs at least one pose");
    std::vector<Pose> poses;
    for (int i = 0; i < count; ++i) {
        const double a = (start_deg + (count > 1 ? span_deg * i / (count - 1) : 0.0)) * kPi / 180.0;
        const Vec3 eye = center + Vec3(radius * std::cos(a), radius * std::sin(a), height);
        poses.push_back(Pose::look_at(eye, center, Vec3::UnitZ()));
    }
    return poses;
}

// --- IR subsampling -------------------------------------------------------------

std::vector<IrCell> subsample_ir_cells(const ImageF& ir, const ImageF& depth) {
    if (ir.width < kIrCrop || ir.height < kIrCrop) throw std::invalid_argument("IR image smaller than 192x192");
    if (!depth.same_size(ir)) throw std::invalid_argument("IR and depth sizes differ");
    const int x0 = (ir.width - kIrCrop) / 2, y0 = (ir.height - kIrCrop) / 2;
    const int cells = kIrCrop / kIrCell;
    std::vector<IrCell> out;
    for (int cy = 0; cy < cells; ++cy) {
        for (int cx = 0; cx < cells; ++cx) {
            int bx = -1, by = -1;
            float best = -1;
            for (int y = y0 + cy * kIrCell; y < y0 + (cy + 1) * kIrCell; ++y)
                for (int x = x0 + cx * kIrCell; x < x0 + (cx + 1) * kIrCell; ++x)
                    if (depth(x, y) > 0 && ir(x, y) > best) best = ir(x, y), bx = x, by = y;
            if (bx < 0) continue;
            double sum = ir(bx, by);
            const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
            for (const auto& o : nb) sum += ir(bx + o[0], by + o[1]);
            out.push_back({bx, by, sum / 5.0});
        }
    }
    return out;
}

std::vector<IrSample> subsample_ir(const ImageF& ir, const ImageF& depth, const PinholeCamera& camera,
                                   const Pose& pose, const TriangleMesh& mesh, const std::vector<int>& labels,
                                   const Vec3& projector_offset, int frame_id) {
    const auto cells = subsample_ir_cells(ir, depth);
    const SurfaceMap map = rasterize(mesh, camera, pose);
    const Vec3 eye = pose.t, projector = pose * projector_offset;
    std::vector<IrSample> out;
    for (const auto& c : cells) {
        const int f = map.face(c.x, c.y);
        if (f < 0) continue;
        IrSample s;
        s.L = c.L;
        s.point = pose * backproject(camera, Vec2(c.x, c.y), depth(c.x, c.y));
        const Vec3 bary = map.bary(c.x, c.y).cast<double>();
        s.n = mesh.normal_at(f, bary);
        s.v = (eye - s.point).normalized();
        const Vec3 lv = projector - s.point;
        s.d = lv.norm();
        s.l = lv / s.d;
        s.h = (s.v + s.l).normalized();
        if (s.n.dot(s.l) <= 0 || s.n.dot(s.v) <= 0) continue;
        int k = 0;
        bary.maxCoeff(&k);
        s.point_id = mesh.faces[size_t(f)][size_t(k)];
        s.segment = labels.empty() ? 0 : labels[size_t(s.point_id)];
        s.frame = frame_id;
        out.push_back(s);
    }
    return out;
}

// --- scene description ------------------------------------------------------------

namespace {

Vec3 vec3(const json& j) {
    if (!j.is_array() || j.size() != 3) throw Error("expected a 3-vector, got " + j.dump());
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Rgb rgb(const json& j) {
    if (j.is_number()) return Rgb::Constant(j.get<float>());
    return vec3(j).cast<float>();
}

TexturePattern parse_pattern(const json& j) {
    TexturePattern p;
    if (!j.is_object()) {
        p.a = p.b = rgb(j);
        return p;
    }
    const std::string kind = j.value("pattern", "constant");
    static const std::map<std::string, TexturePattern::Kind> kinds = {{"constant", TexturePattern::Kind::Constant},
                                                                      {"checker", TexturePattern::Kind::Checker},
                                                                      {"sines", TexturePattern::Kind::Sines},
                                                                      {"noise", TexturePattern::Kind::Noise}};
    const auto it = kinds.find(kind);
    if (it == kinds.end()) throw Error("unknown texture pattern " + kind);
    p.kind = it->second;
    p.a = rgb(j.at("a"));
    p.b = j.contains("b") ? rgb(j.at("b")) : p.a;
    p.scale = j.value("scale", 0.05);
    p.seed = j.value("seed", 1u);
    return p;
}

SceneMaterial parse_material(const json& j) {
    SceneMaterial m;
    m.name = j.at("name").get<std::string>();
    m.albedo = parse_pattern(j.at("albedo"));
    const double rho_s = j.value("rho_s", 0.0);
    if (j.contains("alpha_x")) {
        m.ward = brdf::WardParams::aniso(rho_s, j.at("alpha_x").get<double>(), j.at("alpha_y").get<double>());
    } else {
        m.ward = brdf::WardParams::iso(rho_s, j.value("alpha", 0.1));
    }
    m.ir_rho = j.value("ir_rho", 0.5);
    if (j.contains("tangent")) m.tangent = vec3(j.at("tangent")).normalized();
    return m;
}

TriangleMesh parse_object(const json& j, const std::filesystem::path& base) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "plane") {
        const auto seg = j.value("segments", std::vector<int>{10, 10});
        const auto size = j.at("size").get<std::vector<double>>();
        return make_plane(vec3(j.at("center")), vec3(j.value("axis_u", json::array({1, 0, 0}))),
                          vec3(j.value("axis_v", json::array({0, 1, 0}))), size.at(0), size.at(1), seg.at(0),
                          seg.at(1));
    }
    if (type == "box") return make_box(vec3(j.at("center")), vec3(j.at("half_extent")), j.value("segments", 2));
    if (type == "sphere") {
        const auto seg = j.value("segments", std::vector<int>{24, 12});
        return make_sphere(vec3(j.at("center")), j.at("radius").get<double>(), seg.at(0), seg.at(1));
    }
    if (type == "cylinder")
        return make_cylinder(vec3(j.at("base")), vec3(j.value("axis", json::array({0, 0, 1}))),
                             j.at("radius").get<double>(), j.at("height").get<double>(), j.value("segments", 24),
                             j.value("rings", 4), j.value("caps", true));
    if (type == "mesh") {
        std::filesystem::path p = j.at("path").get<std::string>();
        if (p.is_relative()) p = base / p;
        TriangleMesh mesh = io::read_mesh(p);
        mesh.uv_charts.clear();
        return mesh;
    }
    throw Error("unknown object type " + type);
}

EnvironmentMap parse_environment(const json& j, const std::filesystem::path& base) {
    EnvironmentMap env;
    if (j.contains("path")) {
        std::filesystem::path p = j.at("path").get<std::string>();
        if (p.is_relative()) p = base / p;
        env = io::read_environment(p);
    } else if (j.contains("uniform")) {
        env = EnvironmentMap::uniform(rgb(j.at("uniform")), j.value("width", 64));
    } else {
        ProceduralEnvironment spec;
        const json& pj = j.contains("procedural") ? j.at("procedural") : j;
        if (pj.contains("zenith")) spec.zenith = rgb(pj.at("zenith"));
        if (pj.contains("horizon")) spec.horizon = rgb(pj.at("horizon"));
        if (pj.contains("ground")) spec.ground = rgb(pj.at("ground"));
        spec.width = pj.value("width", 256);
        for (const auto& l : pj.value("lights", json::array())) {
            EnvLight light;
            light.theta_deg = l.value("theta_deg", light.theta_deg);
            light.phi_deg = l.value("phi_deg", light.phi_deg);
            light.size_deg = l.value("size_deg", light.size_deg);
            if (l.contains("radiance")) light.radiance = rgb(l.at("radiance"));
            spec.lights.push_back(light);
        }
        env = make_environment(spec);
    }
    if (j.contains("rotation_deg")) {
        const Vec3 r = vec3(j.at("rotation_deg")) * (kPi / 180.0);
        env.set_rotation(Pose::from_axis_angle(r, Vec3::Zero()).R);
    }
    return env;
}

std::vector<Pose> parse_trajectory(const json& j) {
    if (j.contains("poses")) {
        std::vector<Pose> poses;
        for (const auto& p : j.at("poses")) {
            Pose pose;
            const auto R = p.at("R").get<std::vector<double>>();
            if (R.size() != 9) throw Error("pose R needs 9 entries");
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) pose.R(r, c) = R[size_t(r * 3 + c)];
            pose.t = vec3(p.at("t"));
            pose.validate();
            poses.push_back(pose);
        }
        return poses;
    }
    if (j.value("type", std::string("orbit")) == "dolly") {
        // straight approach along `direction`, always looking at the center
        const Vec3 c = vec3(j.at("center")), dir = vec3(j.at("direction")).normalized();
        const int count = j.value("count", 8);
        const double d0 = j.value("near", 0.5), d1 = j.value("far", 1.5);
        std::vector<Pose> poses;
        for (int i = 0; i < count; ++i) {
            const double d = count > 1 ? d0 + (d1 - d0) * i / (count - 1) : d0;
            const Vec3 up = std::abs(dir.z()) > 0.99 ? Vec3::UnitY() : Vec3::UnitZ();
            poses.push_back(Pose::look_at(c + d * dir, c, up));
        }
        return poses;
    }
    return orbit_trajectory(vec3(j.at("center")), j.at("radius").get<double>(), j.value("height", 0.5),
                            j.value("count", 36), j.value("start_deg", 0.0), j.value("span_deg", 60.0));
}

std::filesystem::path scene_dir() { return SLF_SCENE_DIR; }

}  // namespace

GroundTruthScene scene_from_json(const std::string& text, const std::filesystem::path& base) {
    const json j = json::parse(text);
    GroundTruthScene scene;
    scene.name = j.value("name", "scene");
    std::map<std::string, int> by_name;
    for (const auto& m : j.at("materials")) {
        scene.materials.push_back(parse_material(m));
        if (!by_name.emplace(scene.materials.back().name, int(scene.materials.size()) - 1).second)
            throw Error("duplicate material " + scene.materials.back().name);
    }
    for (const auto& o : j.at("objects")) {
        const std::string mat = o.at("material").get<std::string>();
        const auto it = by_name.find(mat);
        if (it == by_name.end()) throw Error("object references unknown material " + mat);
        const TriangleMesh part = parse_object(o, base);
        scene.mesh.append(part);
        scene.labels.insert(scene.labels.end(), part.vertices.size(), it->second);
    }
    scene.environment = parse_environment(j.value("environment", json::object()), base);
    if (j.contains("projector")) {
        const auto& p = j.at("projector");
        scene.projector.kappa = p.value("kappa", scene.projector.kappa);
        scene.projector.gamma = p.value("gamma", scene.projector.gamma);
        if (p.contains("offset")) scene.projector.offset = vec3(p.at("offset"));
        scene.projector.mode =
            p.value("mode", std::string("dense")) == "speckle" ? IrProjector::Mode::Speckle : IrProjector::Mode::Dense;
        scene.projector.speckle_period = p.value("speckle_period", 3);
    }
    if (j.contains("camera")) {
        const auto& c = j.at("camera");
        scene.camera.fx = c.value("fx", scene.camera.fx);
        scene.camera.fy = c.value("fy", scene.camera.fy);
        scene.camera.width = c.value("width", scene.camera.width);
        scene.camera.height = c.value("height", scene.camera.height);
        scene.camera.cx = c.value("cx", (scene.camera.width - 1) / 2.0);
        scene.camera.cy = c.value("cy", (scene.camera.height - 1) / 2.0);
    }
    if (j.contains("trajectory")) scene.trajectory = parse_trajectory(j.at("trajectory"));
    scene.atlas_size = j.value("atlas_size", 1024);
    AtlasOptions atlas;
    atlas.texels_per_meter = j.value("texels_per_meter", 0.0);
    parameterize_atlas(scene.mesh, scene.atlas_size, atlas);
    scene.validate();
    return scene;
}

std::vector<std::string> builtin_scenes() {
    std::vector<std::string> names;
    for (const auto& e : std::filesystem::directory_iterator(scene_dir()))
        if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

GroundTruthScene builtin_scene(const std::string& name) {
    const auto path = scene_dir() / (name + ".json");
    if (!std::filesystem::exists(path)) throw Error("no bundled scene named " + name);
    return load_scene(path.string());
}

GroundTruthScene load_scene(const std::string& name_or_path) {
    const std::filesystem::path p(name_or_path);
    if (p.extension() != ".json") return builtin_scene(name_or_path);
    std::ifstream in(p);
    if (!in) throw Error("cannot read scene " + name_or_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return scene_from_json(ss.str(), p.parent_path());
}

}  // namespace slf::sim
