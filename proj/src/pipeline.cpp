#include "slf/pipeline.hpp"

#include "slf/brdffit.hpp"
#include "slf/highlight.hpp"
#include "slf/io.hpp"
#include "slf/ircalib.hpp"
#include "slf/matseg.hpp"
#include "slf/raster.hpp"
#include "slf/sensorsim.hpp"
#include "slf/texfuse.hpp"
#include "slf/tracking.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

namespace fs = std::filesystem;
using nlohmann::json;

namespace slf::pipeline {

using namespace slf::io;

StageError::StageError(std::string stage, const std::string& message)
    : Error(stage + ": " + message), stage_(std::move(stage)) {}

// --- configuration ----------------------------------------------------------------------

nlohmann::json Config::defaults() {
    return nlohmann::json::parse(R"({
  "scene": "desk",
  "output": "slf_out",
  "seed": 7,
  "threads": 0,
  "simulate": {
    "frames": 0,
    "camera_scale": 1.0,
    "rgb_noise": 0.0,
    "ir_noise": 0.0,
    "depth_noise": 0.0,
    "specular_env_width": 64,
    "irradiance_env_width": 32,
    "shadows": true,
    "white_target": "white_target"
  },
  "calibrate": {
    "max_iterations": 100,
    "saturation": 0.999
  },
  "track": {
    "methods": ["full"],
    "held_out_every": 10,
    "motion_model": "constant_velocity",
    "icp": {
      "max_distance": 0.05,
      "max_normal_angle_deg": 30.0,
      "max_iterations": 20,
      "min_correspondences": 500,
      "stride": 2
    },
    "photometric": {
      "objective": "gradient",
      "levels": 3,
      "max_iterations": 10,
      "reject": 0.2,
      "min_valid_fraction": 0.2
    }
  },
  "fuse": {
    "atlas_size": 0,
    "sigma_m": 0.1,
    "delta_z": 0.02
  },
  "segment": {
    "provider": "oracle",
    "classes": 0,
    "label_noise": 0.2,
    "frame_stride": 3,
    "lambda_p": 1.0,
    "lambda_g": 1.0,
    "theta_p": 10.0,
    "eps": 0.01
  },
  "fit_brdf": {
    "albedo": "per_point",
    "anisotropic": false,
    "frame_stride": 1,
    "min_samples": 20,
    "specular_cutoff_deg": 60.0
  },
  "dehighlight": {
    "tau": 0.03,
    "v": 0.05,
    "iterations": 2,
    "max_diffuse": 0.03,
    "min_specular": 0.15
  },
  "render": {
    "env_width": 64,
    "specular": true
  },
  "eval": {
    "pose": "estimated"
  }
})");
}

namespace {

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return !(a.is_number_integer() && b.is_number_float());
    return a.type() == b.type();
}

void merge(json& base, const json& over, const std::string& where) {
    if (!over.is_object()) throw std::invalid_argument("config section '" + where + "' must be an object");
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string key = where.empty() ? it.key() : where + "." + it.key();
        if (!base.contains(it.key())) throw std::invalid_argument("unknown config key '" + key + "'");
        json& slot = base[it.key()];
        if (slot.is_object()) {
            merge(slot, it.value(), key);
        } else {
            if (!same_kind(slot, it.value())) throw std::invalid_argument("config key '" + key + "' has the wrong type");
            slot = it.value();
        }
    }
}

const std::vector<std::string> kMethods{"full", "icp", "ground_truth"};

}  // namespace

Config::Config() : json_(defaults()) {}

Config::Config(const nlohmann::json& overrides) : json_(defaults()) {
    if (!overrides.is_null()) merge(json_, overrides, "");
    for (const auto& m : methods())
        if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
            throw std::invalid_argument("unknown tracking method '" + m + "'");
    if (methods().empty()) throw std::invalid_argument("track.methods is empty");
    if (json_["track"]["held_out_every"].get<int>() < 2) throw std::invalid_argument("track.held_out_every must be >= 2");
    const std::string pose = json_["eval"]["pose"];
    if (pose != "estimated" && pose != "true") throw std::invalid_argument("eval.pose must be 'estimated' or 'true'");
    const std::string provider = json_["segment"]["provider"];
    if (provider != "oracle" && provider != "kmeans") throw std::invalid_argument("segment.provider must be 'oracle' or 'kmeans'");
    const std::string obj = json_["track"]["photometric"]["objective"];
    if (obj != "gradient" && obj != "raw") throw std::invalid_argument("photometric objective must be 'gradient' or 'raw'");
    const std::string motion = json_["track"]["motion_model"];
    if (motion != "constant_velocity" && motion != "static")
        throw std::invalid_argument("track.motion_model must be 'constant_velocity' or 'static'");
    const std::string albedo = json_["fit_brdf"]["albedo"];
    if (albedo != "per_point" && albedo != "constant") throw std::invalid_argument("fit_brdf.albedo must be 'per_point' or 'constant'");
}

Config Config::load(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read config " + path.string());
    try {
        return Config(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
}

fs::path Config::output() const { return json_["output"].get<std::string>(); }

std::vector<std::string> Config::methods() const { return json_["track"]["methods"].get<std::vector<std::string>>(); }

bool Config::held_out(int frame) const {
    const int n = json_["track"]["held_out_every"];
    return frame % n == n - 1;
}

// --- shared helpers -------------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

fs::path sim_dir(const Config& c) { return c.output() / "simulate"; }
fs::path white_dir(const Config& c) { return c.output() / "simulate" / "white_target"; }

std::string frame_name(int i, const char* suffix) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "frame_%04d_%s", i, suffix);
    return buf;
}

json read_json(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw Error("cannot read " + p.string());
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw Error(p.string() + ": " + e.what());
    }
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream f(p);
    if (!f) throw Error("cannot write " + p.string());
    f << j.dump(2) << "\n";
}

json camera_json(const PinholeCamera& c) {
    return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

PinholeCamera camera_from(const json& j) {
    PinholeCamera c;
    c.fx = j.at("fx");
    c.fy = j.at("fy");
    c.cx = j.at("cx");
    c.cy = j.at("cy");
    c.width = j.at("width");
    c.height = j.at("height");
    c.validate();
    return c;
}

json mat_json(const Mat3& R) {
    json a = json::array();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) a.push_back(R(r, c));
    return a;
}

Mat3 mat_from(const json& a) {
    Mat3 R;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) R(r, c) = a.at(size_t(3 * r + c)).get<double>();
    return R;
}

std::vector<Pose> poses_of(const std::vector<tracking::TrajectoryEntry>& t) {
    std::vector<Pose> out;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i].frame != int(i)) throw Error("trajectory frames are not consecutive");
        out.push_back(t[i].pose);
    }
    return out;
}

std::vector<Pose> true_poses(const Config& c) { return poses_of(tracking::read_trajectory(sim_dir(c) / "poses.jsonl")); }

std::vector<Pose> estimated_poses(const Config& c, const std::string& method) {
    return poses_of(tracking::read_trajectory(method_dir(c, method) / "trajectory.jsonl"));
}

TriangleMesh load_mesh(const Config& c) { return read_ply(sim_dir(c) / "mesh.ply"); }

std::vector<int> read_labels(const fs::path& p, size_t vertices) {
    const json j = read_json(p);
    auto labels = j.at("labels").get<std::vector<int>>();
    if (labels.size() != vertices) throw Error(p.string() + " does not match the mesh");
    return labels;
}

int atlas_size_of(const Config& c) { return read_json(sim_dir(c) / "sensor.json").at("atlas_size"); }

void log(const std::string& stage, const std::string& msg) { std::cerr << "[" << stage << "] " << msg << std::endl; }

template <typename F>
auto guarded(const std::string& stage, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

}  // namespace

fs::path method_dir(const Config& config, const std::string& method) { return config.output() / method; }

PinholeCamera load_camera(const Config& config) {
    return camera_from(read_json(sim_dir(config) / "sensor.json").at("camera"));
}

// --- simulate ---------------------------------------------------------------------------

namespace {

sim::SimulatorOptions simulator_options(const Config& c) {
    const json& s = c.json()["simulate"];
    sim::SimulatorOptions o;
    o.specular_env_width = s["specular_env_width"];
    o.irradiance_env_width = s["irradiance_env_width"];
    o.shadows = s["shadows"];
    o.noise.rgb_sigma = s["rgb_noise"];
    o.noise.ir_sigma = s["ir_noise"];
    o.noise.depth_sigma = s["depth_noise"];
    o.seed = c.json()["seed"].get<std::uint64_t>();
    return o;
}

}  // namespace

void simulate(const Config& config) {
    guarded("simulate", [&] {
        const json& s = config.json()["simulate"];
        const fs::path dir = sim_dir(config);
        fs::create_directories(dir);
        sim::GroundTruthScene scene = sim::load_scene(config.json()["scene"]);
        const int fuse_size = config.json()["fuse"]["atlas_size"];
        const int atlas = fuse_size > 0 ? fuse_size : scene.atlas_size;
        if (atlas != scene.atlas_size) {
            parameterize_atlas(scene.mesh, atlas);
            scene.atlas_size = atlas;
        }
        const PinholeCamera cam = scene.camera.scaled(s["camera_scale"].get<double>());
        std::vector<Pose> traj = scene.trajectory;
        const int frames = s["frames"];
        if (frames > 0 && size_t(frames) < traj.size()) traj.resize(size_t(frames));
        const sim::Simulator simu(scene, simulator_options(config));

        write_ply(dir / "mesh.ply", scene.mesh);
        write_json(dir / "labels.json", {{"labels", scene.labels}});
        json names = json::array();
        for (const auto& m : scene.materials) names.push_back(m.name);
        write_json(dir / "sensor.json", {{"scene", scene.name},
                                         {"camera", camera_json(cam)},
                                         {"atlas_size", atlas},
                                         {"projector_offset", {scene.projector.offset.x(), scene.projector.offset.y(),
                                                               scene.projector.offset.z()}},
                                         {"materials", names},
                                         {"environment_rotation", mat_json(scene.environment.rotation())}});
        const EnvironmentMap& env = scene.environment;
        ImageRgb envimg(env.width(), env.height());
        for (int y = 0; y < env.height(); ++y)
            for (int x = 0; x < env.width(); ++x) envimg(x, y) = env.texel(x, y);
        write_pfm(dir / "environment.pfm", envimg);

        std::vector<tracking::TrajectoryEntry> truth;
        for (size_t i = 0; i < traj.size(); ++i) {
            const auto f = simu.render_frame(cam, traj[i], int(i));
            write_pfm(dir / frame_name(int(i), "rgb.pfm"), f.rgb);
            write_png(dir / frame_name(int(i), "rgb.png"), f.rgb);
            write_pfm(dir / frame_name(int(i), "depth.pfm"), f.depth);
            write_pfm(dir / frame_name(int(i), "ir.pfm"), f.ir);
            truth.push_back({int(i), traj[i]});
        }
        tracking::write_trajectory(dir / "poses.jsonl", truth);
        log("simulate", std::to_string(traj.size()) + " frames of " + scene.name);

        // white-target sequence for IR calibration, seen by the same camera and projector
        sim::GroundTruthScene white = sim::load_scene(s["white_target"]);
        white.projector = scene.projector;
        white.camera = cam;
        const fs::path wdir = white_dir(config);
        fs::create_directories(wdir);
        const sim::Simulator wsim(white, simulator_options(config));
        std::vector<tracking::TrajectoryEntry> wposes;
        for (size_t i = 0; i < white.trajectory.size(); ++i) {
            const auto f = wsim.render_frame(cam, white.trajectory[i], int(i));
            write_pfm(wdir / frame_name(int(i), "depth.pfm"), f.depth);
            write_pfm(wdir / frame_name(int(i), "ir.pfm"), f.ir);
            wposes.push_back({int(i), white.trajectory[i]});
        }
        tracking::write_trajectory(wdir / "poses.jsonl", wposes);
        write_ply(wdir / "mesh.ply", white.mesh);
        write_json(wdir / "labels.json", {{"labels", white.labels}});
    });
}

// --- calibrate ------------------------------------------------------------------------------

void calibrate(const Config& config) {
    guarded("calibrate", [&] {
        const fs::path wdir = white_dir(config);
        const json sensor = read_json(sim_dir(config) / "sensor.json");
        const PinholeCamera cam = camera_from(sensor.at("camera"));
        const auto& o = sensor.at("projector_offset");
        const Vec3 offset(o[0], o[1], o[2]);
        const TriangleMesh mesh = read_ply(wdir / "mesh.ply");
        const auto labels = read_labels(wdir / "labels.json", mesh.vertices.size());
        const auto poses = poses_of(tracking::read_trajectory(wdir / "poses.jsonl"));
        std::vector<ircalib::CalibrationSample> samples;
        for (size_t i = 0; i < poses.size(); ++i) {
            const ImageF ir = read_pfm_grey(wdir / frame_name(int(i), "ir.pfm"));
            const ImageF depth = read_pfm_grey(wdir / frame_name(int(i), "depth.pfm"));
            const auto s = sim::subsample_ir(ir, depth, cam, poses[i], mesh, labels, offset, int(i));
            const auto c = ircalib::samples_from_ir(s);
            samples.insert(samples.end(), c.begin(), c.end());
        }
        ircalib::CalibrationOptions opt;
        opt.max_iterations = config.json()["calibrate"]["max_iterations"];
        opt.saturation = config.json()["calibrate"]["saturation"];
        const auto cal = ircalib::calibrate(samples, opt);
        const fs::path dir = config.output() / "calibrate";
        fs::create_directories(dir);
        write_json(dir / "calibration.json", {{"kappa", cal.kappa},
                                              {"gamma", cal.gamma},
                                              {"rms", cal.rms},
                                              {"samples", samples.size()},
                                              {"iterations", cal.iterations},
                                              {"converged", cal.converged}});
        char buf[128];
        std::snprintf(buf, sizeof buf, "kappa %.5f gamma %.5f rms %.2e from %zu samples", cal.kappa, cal.gamma, cal.rms,
                      samples.size());
        log("calibrate", buf);
    });
}

namespace {

ircalib::IrCalibration load_calibration(const Config& c) {
    const json j = read_json(c.output() / "calibrate" / "calibration.json");
    ircalib::IrCalibration cal;
    cal.kappa = j.at("kappa");
    cal.gamma = j.at("gamma");
    cal.rms = j.at("rms");
    return cal;
}

tracking::IcpOptions icp_options(const Config& c) {
    const json& j = c.json()["track"]["icp"];
    tracking::IcpOptions o;
    o.max_distance = j["max_distance"];
    o.max_normal_angle_deg = j["max_normal_angle_deg"];
    o.max_iterations = j["max_iterations"];
    o.min_correspondences = j["min_correspondences"];
    o.stride = j["stride"];
    return o;
}

tracking::PhotometricOptions photometric_options(const Config& c) {
    const json& j = c.json()["track"]["photometric"];
    tracking::PhotometricOptions o;
    o.objective = j["objective"] == "raw" ? tracking::Objective::RawIntensity : tracking::Objective::GradientMagnitude;
    o.levels = j["levels"];
    o.max_iterations = j["max_iterations"];
    o.reject = j["reject"];
    o.min_valid_fraction = j["min_valid_fraction"];
    return o;
}

texfuse::FusionParams fusion_params(const Config& c) {
    texfuse::FusionParams p;
    p.sigma_m = c.json()["fuse"]["sigma_m"];
    p.delta_z = c.json()["fuse"]["delta_z"];
    p.validate();
    return p;
}

}  // namespace

// --- track -------------------------------------------------------------------------------------

void track(const Config& config, const std::string& method) {
    guarded("track", [&] {
        const PinholeCamera cam = load_camera(config);
        const TriangleMesh mesh = load_mesh(config);
        const auto truth = true_poses(config);
        const fs::path sdir = sim_dir(config);
        const bool full = method == "full";
        const bool velocity = config.json()["track"]["motion_model"] == "constant_velocity";
        const auto icp_opt = icp_options(config);
        const auto photo_opt = photometric_options(config);
        // the running atlas supplies the photometric prediction
        texfuse::Fuser fuser(mesh, atlas_size_of(config), cam, fusion_params(config));

        std::vector<tracking::TrajectoryEntry> out;
        json stats = json::array();
        int lost = 0;
        for (size_t i = 0; i < truth.size(); ++i) {
            const int fi = int(i);
            json st{{"frame", fi}};
            Pose pose;
            const ImageF depth = read_pfm_grey(sdir / frame_name(fi, "depth.pfm"));
            ImageRgb rgb;
            if (full) rgb = read_pfm_rgb(sdir / frame_name(fi, "rgb.pfm"));
            if (method == "ground_truth" || i == 0) {
                // the first frame anchors the world frame of the mesh
                pose = truth[i];
            } else {
                const Pose prev = out.back().pose;
                // the model is rendered at the last estimate; the motion model only seeds the solver
                Pose init = prev;
                if (velocity && i >= 2) init = prev * (out[i - 2].pose.inverse() * prev);
                init.orthonormalize();
                const SurfaceMap model = rasterize(mesh, cam, prev);
                const Image<Vec3f> normals = normal_image(mesh, model);
                pose = init;
                try {
                    const auto r = tracking::icp_align(depth, model.depth, normals, cam, prev, init, icp_opt);
                    pose = r.pose;
                    st["icp"] = {{"iterations", r.iterations}, {"correspondences", r.correspondences},
                                 {"rms", r.rms}, {"rank_deficient", r.rank_deficient}};
                } catch (const tracking::TrackingLost& e) {
                    ++lost;
                    st["icp"] = {{"lost", e.what()}};
                }
                if (full) {
                    const auto pred = texfuse::render_prediction(fuser.atlas(), mesh, cam, pose);
                    try {
                        const auto r = tracking::photometric_refine(rgb, pred.color, pred.depth, pred.valid, cam, pose,
                                                                    pose, photo_opt);
                        st["photometric"] = {{"iterations", r.iterations}, {"initial_cost", r.initial_cost},
                                             {"final_cost", r.final_cost}, {"diverged", r.diverged}};
                        if (!r.diverged) pose = r.pose;
                    } catch (const std::invalid_argument& e) {
                        st["photometric"] = {{"skipped", e.what()}};
                    }
                }
            }
            if (full && !config.held_out(fi)) fuser.add(rgb, depth, pose, fi);
            const auto err = tracking::pose_error(pose, truth[i]);
            st["rotation_error_deg"] = err.rotation * 180.0 / kPi;
            st["translation_error_m"] = err.translation;
            stats.push_back(std::move(st));
            out.push_back({fi, pose});
        }
        const fs::path dir = method_dir(config, method);
        fs::create_directories(dir);
        tracking::write_trajectory(dir / "trajectory.jsonl", out);
        write_json(dir / "track.json", {{"method", method}, {"lost", lost}, {"frames", stats}});
        double rot = 0, trans = 0;
        for (const auto& s : stats) {
            rot += s["rotation_error_deg"].get<double>();
            trans += s["translation_error_m"].get<double>();
        }
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s: mean error %.3f deg, %.2f mm over %zu frames", method.c_str(),
                      rot / double(stats.size()), 1000 * trans / double(stats.size()), stats.size());
        log("track", buf);
    });
}

// --- fuse ----------------------------------------------------------------------------------------

void fuse(const Config& config, const std::string& method) {
    guarded("fuse", [&] {
        const PinholeCamera cam = load_camera(config);
        const TriangleMesh mesh = load_mesh(config);
        const auto poses = estimated_poses(config, method);
        const fs::path sdir = sim_dir(config), dir = method_dir(config, method);
        texfuse::Fuser fuser(mesh, atlas_size_of(config), cam, fusion_params(config));
        const fs::path sidecar = dir / "observations.bin";
        texfuse::write_observations(sidecar, {});
        size_t count = 0;
        int fused = 0;
        for (size_t i = 0; i < poses.size(); ++i) {
            if (config.held_out(int(i))) continue;
            std::vector<texfuse::Observation> obs;
            fuser.add(read_pfm_rgb(sdir / frame_name(int(i), "rgb.pfm")),
                      read_pfm_grey(sdir / frame_name(int(i), "depth.pfm")), poses[i], int(i), &obs);
            texfuse::write_observations(sidecar, obs, true);
            count += obs.size();
            ++fused;
        }
        fuser.atlas().save(dir / "atlas");
        log("fuse", std::to_string(fused) + " frames, " + std::to_string(fuser.atlas().observed_count()) +
                        " texels observed, " + std::to_string(count) + " observations");
    });
}

// --- segment -------------------------------------------------------------------------------------

void segment(const Config& config, const std::string& method) {
    guarded("segment", [&] {
        const json& s = config.json()["segment"];
        const PinholeCamera cam = load_camera(config);
        const TriangleMesh mesh = load_mesh(config);
        const json sensor = read_json(sim_dir(config) / "sensor.json");
        int classes = s["classes"];
        if (classes <= 0) classes = int(sensor.at("materials").size());
        const auto atlas = texfuse::TextureAtlas::load(method_dir(config, method) / "atlas");
        const auto colors = matseg::vertex_colors_from_atlas(mesh, atlas.color, atlas.weight);
        const std::uint64_t seed = config.json()["seed"].get<std::uint64_t>();

        matseg::VertexProbabilities probs;
        if (s["provider"] == "oracle") {
            const auto truth = read_labels(sim_dir(config) / "labels.json", mesh.vertices.size());
            const matseg::OracleProvider provider(mesh, truth, classes, cam, s["label_noise"].get<double>(), seed);
            const auto poses = estimated_poses(config, method);
            const int stride = std::max(1, s["frame_stride"].get<int>());
            std::vector<matseg::ProbabilityFrame> frames;
            for (size_t i = 0; i < poses.size(); i += size_t(stride))
                if (!config.held_out(int(i))) frames.push_back(provider.evaluate({}, poses[i], int(i)));
            probs = matseg::project_probabilities(frames, mesh, cam);
        } else {
            probs = matseg::kmeans_probabilities(mesh, colors, classes, seed);
        }
        matseg::MrfParams mrf;
        mrf.lambda_p = s["lambda_p"];
        mrf.lambda_g = s["lambda_g"];
        mrf.theta_p = s["theta_p"];
        mrf.eps = s["eps"];
        const auto seg = matseg::solve(probs, mesh, colors, mrf);
        write_json(method_dir(config, method) / "labels.json", {{"classes", classes},
                                                                {"energy", seg.energy},
                                                                {"converged", seg.converged},
                                                                {"labels", seg.labels}});
        std::string sizes;
        for (const auto& m : seg.members) sizes += " " + std::to_string(m.size());
        log("segment", std::to_string(classes) + " classes, members" + sizes);
    });
}

// --- fit-brdf ------------------------------------------------------------------------------------

void fit_brdf(const Config& config, const std::string& method) {
    guarded("fit-brdf", [&] {
        const json& s = config.json()["fit_brdf"];
        const PinholeCamera cam = load_camera(config);
        const TriangleMesh mesh = load_mesh(config);
        const fs::path dir = method_dir(config, method), sdir = sim_dir(config);
        const json seg = read_json(dir / "labels.json");
        const auto labels = read_labels(dir / "labels.json", mesh.vertices.size());
        const int classes = seg.at("classes");
        const json sensor = read_json(sdir / "sensor.json");
        const auto& o = sensor.at("projector_offset");
        const Vec3 offset(o[0], o[1], o[2]);
        const auto calib = load_calibration(config);
        const auto poses = estimated_poses(config, method);

        std::vector<std::vector<IrSample>> by_segment(static_cast<size_t>(classes));
        const int stride = std::max(1, s["frame_stride"].get<int>());
        for (size_t i = 0; i < poses.size(); i += size_t(stride)) {
            if (config.held_out(int(i))) continue;
            const ImageF ir = read_pfm_grey(sdir / frame_name(int(i), "ir.pfm"));
            const ImageF depth = read_pfm_grey(sdir / frame_name(int(i), "depth.pfm"));
            for (const auto& x : sim::subsample_ir(ir, depth, cam, poses[i], mesh, labels, offset, int(i)))
                if (x.segment >= 0 && x.segment < classes) by_segment[size_t(x.segment)].push_back(x);
        }

        brdf::FitOptions opt;
        opt.mode = s["albedo"] == "constant" ? brdf::AlbedoMode::Constant : brdf::AlbedoMode::PerPoint;
        opt.min_samples = s["min_samples"];
        opt.specular_cutoff_deg = s["specular_cutoff_deg"];
        std::vector<brdf::MaterialModel> materials;
        json report = json::array();
        for (int k = 0; k < classes; ++k) {
            const auto& samples = by_segment[size_t(k)];
            json r{{"segment", k}, {"samples", samples.size()}};
            brdf::MaterialModel m;
            m.segment = k;
            m.ward = brdf::WardParams::iso(0.0, 0.1);
            if (int(samples.size()) < opt.min_samples) {
                // nothing to fit: render the segment diffuse only
                r["status"] = "too_few_samples";
            } else {
                brdf::FitOptions so = opt;
                if (s["anisotropic"].get<bool>()) {
                    try {
                        const auto slice = brdf::build_brdf_slice(samples, &calib);
                        so.isotropic = false;
                        so.frame = brdf::fit_tangent(slice);
                    } catch (const Error& e) {
                        r["tangent"] = e.what();
                    } catch (const std::invalid_argument& e) {
                        r["tangent"] = e.what();
                    }
                }
                const auto fit = brdf::fit_segment(samples, calib, so);
                m = fit.model;
                m.segment = k;
                r["status"] = brdf::to_string(fit.status);
                r["iterations"] = fit.iterations;
            }
            r["rho_s"] = m.ward.rho_s;
            r["alpha"] = {m.ward.alpha_x, m.ward.alpha_y};
            r["rho"] = m.rho;
            report.push_back(r);
            materials.push_back(std::move(m));
        }
        brdf::write_materials(dir / "materials.json", materials);
        write_json(dir / "fit.json", report);
        for (const auto& r : report) log("fit-brdf", r.dump());
    });
}

// --- dehighlight --------------------------------------------------------------------------------

void dehighlight(const Config& config, const std::string& method) {
    guarded("dehighlight", [&] {
        const json& s = config.json()["dehighlight"];
        const fs::path dir = method_dir(config, method);
        const TriangleMesh mesh = load_mesh(config);
        const auto atlas = texfuse::TextureAtlas::load(dir / "atlas");
        const auto obs = texfuse::read_observations(dir / "observations.bin");
        highlight::IrlsParams p;
        p.tau = s["tau"];
        p.v = s["v"];
        p.iterations = s["iterations"];
        highlight::RemovalStats stats;
        auto diffuse = highlight::remove_highlights(atlas, obs, p, &stats);
        highlight::MetallicRule rule;
        rule.max_diffuse = s["max_diffuse"];
        rule.min_specular = s["min_specular"];
        const auto materials = brdf::read_materials(dir / "materials.json");
        const auto labels = read_labels(dir / "labels.json", mesh.vertices.size());
        const auto metal = highlight::apply_metallic_rule(diffuse, materials, mesh, labels, rule);
        diffuse.save(dir / "diffuse");
        write_png(dir / "heatmap.png", highlight::difference_heatmap(atlas, diffuse), 1.0);
        write_json(dir / "dehighlight.json", {{"texels", stats.texels},
                                              {"single_observation", stats.single},
                                              {"changed", stats.changed},
                                              {"metallic_segments", metal}});
        log("dehighlight", std::to_string(stats.changed) + " of " + std::to_string(stats.texels) +
                               " texels lowered, " + std::to_string(metal.size()) + " metallic segments");
    });
}

// --- render ------------------------------------------------------------------------------------------

render::SlfModel load_model(const Config& config, const std::string& method) {
    const fs::path dir = method_dir(config, method), sdir = sim_dir(config);
    render::SlfModel m;
    m.mesh = load_mesh(config);
    m.diffuse = texfuse::TextureAtlas::load(dir / "diffuse");
    m.vertex_labels = read_labels(dir / "labels.json", m.mesh.vertices.size());
    m.materials = brdf::read_materials(dir / "materials.json");
    m.environment = read_environment(sdir / "environment.pfm");
    m.environment.set_rotation(mat_from(read_json(sdir / "sensor.json").at("environment_rotation")));
    return m;
}

namespace {

render::RenderOptions render_options(const Config& c) {
    render::RenderOptions o;
    o.env_width = c.json()["render"]["env_width"];
    o.specular = c.json()["render"]["specular"];
    return o;
}

std::vector<Pose> evaluation_poses(const Config& c, const std::string& method) {
    return c.json()["eval"]["pose"] == "true" ? true_poses(c) : estimated_poses(c, method);
}

}  // namespace

void render(const Config& config, const std::string& method) {
    guarded("render", [&] {
        const PinholeCamera cam = load_camera(config);
        const render::SlfRenderer renderer(load_model(config, method), render_options(config));
        const auto poses = evaluation_poses(config, method);
        const fs::path dir = method_dir(config, method) / "render";
        fs::create_directories(dir);
        int n = 0;
        for (size_t i = 0; i < poses.size(); ++i) {
            if (!config.held_out(int(i))) continue;
            const auto r = renderer.render(cam, poses[i]);
            write_pfm(dir / frame_name(int(i), "render.pfm"), r.color);
            write_png(dir / frame_name(int(i), "render.png"), r.color);
            ImageF cov(cam.width, cam.height);
            for (size_t k = 0; k < cov.size(); ++k) cov.pixels[k] = r.coverage.pixels[k];
            write_pfm(dir / frame_name(int(i), "coverage.pfm"), cov);
            ++n;
        }
        log("render", std::to_string(n) + " held-out views");
    });
}

// --- eval ---------------------------------------------------------------------------------------------

eval::EvalReport evaluate(const Config& config, const std::string& method) {
    return guarded("eval", [&] {
        const fs::path dir = method_dir(config, method) / "render", sdir = sim_dir(config);
        const size_t frames = true_poses(config).size();
        eval::EvalReport rep;
        rep.method = method;
        for (size_t i = 0; i < frames; ++i) {
            if (!config.held_out(int(i))) continue;
            const ImageRgb rendered = read_pfm_rgb(dir / frame_name(int(i), "render.pfm"));
            const ImageF cov = read_pfm_grey(dir / frame_name(int(i), "coverage.pfm"));
            const ImageRgb truth = read_pfm_rgb(sdir / frame_name(int(i), "rgb.pfm"));
            const ImageF depth = read_pfm_grey(sdir / frame_name(int(i), "depth.pfm"));
            Mask mask(truth.width, truth.height, 0);
            for (size_t k = 0; k < mask.size(); ++k) mask.pixels[k] = cov.pixels[k] > 0 && depth.pixels[k] > 0;
            rep.views.push_back(eval::evaluate_view(rendered, truth, mask, int(i)));
        }
        if (rep.views.empty()) throw Error("no held-out views to evaluate");
        write_json(method_dir(config, method) / "eval.json", json::parse(eval::to_json({rep}))[0]);
        return rep;
    });
}

// --- whole pipeline -----------------------------------------------------------------------------------

std::vector<eval::EvalReport> run(const Config& config) {
    if (const int t = config.json()["threads"]; t > 0) set_thread_count(t);
    fs::create_directories(config.output());
    {
        std::ofstream f(config.output() / "config.json");
        f << config.dump() << "\n";
    }
    json timings;
    auto timed = [&](const std::string& name, auto&& fn) {
        const auto t0 = Clock::now();
        fn();
        timings[name] = std::chrono::duration<double>(Clock::now() - t0).count();
    };
    const auto start = Clock::now();
    timed("simulate", [&] { simulate(config); });
    timed("calibrate", [&] { calibrate(config); });
    std::vector<eval::EvalReport> reports;
    for (const auto& m : config.methods()) {
        timed(m + "/track", [&] { track(config, m); });
        timed(m + "/fuse", [&] { fuse(config, m); });
        timed(m + "/segment", [&] { segment(config, m); });
        timed(m + "/fit-brdf", [&] { fit_brdf(config, m); });
        timed(m + "/dehighlight", [&] { dehighlight(config, m); });
        timed(m + "/render", [&] { render(config, m); });
        timed(m + "/eval", [&] { reports.push_back(evaluate(config, m)); });
    }
    const fs::path edir = config.output() / "eval";
    fs::create_directories(edir);
    {
        std::ofstream f(edir / "report.json");
        f << eval::to_json(reports) << "\n";
        std::ofstream t(edir / "report.txt");
        t << eval::format_table(reports);
    }
    timings["total"] = std::chrono::duration<double>(Clock::now() - start).count();
    // wall-clock times vary between runs; kept apart from the deterministic artifacts
    write_json(config.output() / "timings.json", timings);
    return reports;
}

}  // namespace slf::pipeline
