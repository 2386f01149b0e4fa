// Command line front end of the surface light field pipeline.

#include "slf/io.hpp"
#include "slf/pipeline.hpp"
#include "slf/sensorsim.hpp"
#include "slf/slfrender.hpp"
#include "slf/tracking.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace slf;

namespace {

struct Options {
    std::string config_path;
    std::string output;
    std::string scene;
    std::string method;
    std::vector<std::string> sets;
    bool print_config = false;
};

// "track.photometric.levels=2" -> {"track": {"photometric": {"levels": 2}}}
nlohmann::json parse_set(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq), text = s.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        value = text;  // bare strings
    }
    nlohmann::json out = value;
    size_t end = key.size();
    while (true) {
        const auto dot = key.rfind('.', end - 1);
        const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1,
                                            end - (dot == std::string::npos ? 0 : dot + 1));
        out = nlohmann::json{{part, out}};
        if (dot == std::string::npos) break;
        end = dot;
    }
    return out;
}

pipeline::Config make_config(const Options& o) {
    nlohmann::json j = nlohmann::json::object();
    if (!o.config_path.empty()) {
        std::ifstream f(o.config_path);
        if (!f) throw Error("cannot read config " + o.config_path);
        j = nlohmann::json::parse(f);
    }
    if (!o.output.empty()) j["output"] = o.output;
    if (!o.scene.empty()) j["scene"] = o.scene;
    for (const auto& s : o.sets) j.merge_patch(parse_set(s));
    pipeline::Config c(j);
    if (const int t = c.json()["threads"]; t > 0) set_thread_count(t);
    return c;
}

std::string method_of(const Options& o, const pipeline::Config& c) { return o.method.empty() ? c.methods().front() : o.method; }

std::vector<std::string> methods_of(const Options& o, const pipeline::Config& c) {
    return o.method.empty() ? c.methods() : std::vector<std::string>{o.method};
}

void write_reports(const pipeline::Config& c, const std::vector<eval::EvalReport>& reports) {
    const fs::path dir = c.output() / "eval";
    fs::create_directories(dir);
    std::ofstream(dir / "report.json") << eval::to_json(reports) << "\n";
    std::ofstream(dir / "report.txt") << eval::format_table(reports);
    std::cout << eval::format_table(reports);
}

Pose pose_from_json(const nlohmann::json& j) {
    Pose p;
    const auto R = j.at("R").get<std::vector<double>>();
    const auto t = j.at("t").get<std::vector<double>>();
    if (R.size() != 9 || t.size() != 3) throw std::invalid_argument("pose needs R (9) and t (3)");
    for (int r = 0; r < 3; ++r)
        for (int k = 0; k < 3; ++k) p.R(r, k) = R[size_t(3 * r + k)];
    p.t = Vec3(t[0], t[1], t[2]);
    p.validate();
    return p;
}

// A single {"R", "t"} object, an array of them, or JSON lines.
std::vector<Pose> read_poses(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    std::vector<Pose> out;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.is_array())
            for (const auto& e : j) out.push_back(pose_from_json(e));
        else
            out.push_back(pose_from_json(j));
    } catch (const nlohmann::json::parse_error&) {
        for (const auto& e : tracking::read_trajectory(path)) out.push_back(e.pose);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Surface light field capture and rendering from synthetic RGB-D-IR scans"};
    app.require_subcommand(0, 1);
    app.fallthrough();
    Options o;
    app.add_option("-c,--config", o.config_path, "JSON config with per-stage sections")->check(CLI::ExistingFile);
    app.add_option("-o,--output", o.output, "output directory (overrides config)");
    app.add_option("-s,--scene", o.scene, "bundled scene name or scene JSON path (overrides config)");
    app.add_option("--set", o.sets, "override a config value, e.g. --set track.held_out_every=5");
    app.add_flag("--print-config", o.print_config, "print the effective config and exit");

    auto add_method = [&](CLI::App* sub) {
        sub->add_option("-m,--method", o.method, "tracking variant: full, icp or ground_truth")
            ->check(CLI::IsMember({"full", "icp", "ground_truth"}));
    };
    auto* simulate = app.add_subcommand("simulate", "render the sensor sequence and the white-target sequence");
    auto* calibrate = app.add_subcommand("calibrate", "fit projector kappa and camera gamma from the white target");
    auto* track = app.add_subcommand("track", "estimate camera poses (ICP, then photometric refinement)");
    auto* fuse = app.add_subcommand("fuse", "fuse RGB frames into the texture atlas and write the observation sidecar");
    auto* segment = app.add_subcommand("segment", "per-vertex material labels");
    auto* fit = app.add_subcommand("fit-brdf", "per-segment Ward parameters from IR samples");
    auto* dehl = app.add_subcommand("dehighlight", "remove specular highlights from the atlas");
    auto* render = app.add_subcommand("render", "render the reconstruction");
    auto* evalc = app.add_subcommand("eval", "virtual rephotography of the held-out views");
    auto* pipe = app.add_subcommand("pipeline", "run every stage in order");
    for (auto* s : {track, fuse, segment, fit, dehl, render, evalc}) add_method(s);

    std::string pose_file, orbit, render_out;
    render->add_option("--pose", pose_file, "pose JSON ({R, t}, an array of them, or trajectory lines)");
    render->add_option("--orbit", orbit, "cx,cy,cz,radius,height,count[,start_deg,span_deg]");
    render->add_option("--out", render_out, "directory for the renders (default <output>/<method>/views)");

    CLI11_PARSE(app, argc, argv);

    try {
        const pipeline::Config config = make_config(o);
        if (o.print_config) {
            std::cout << config.dump() << "\n";
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cout << app.help();
            return 1;
        }
        fs::create_directories(config.output());
        if (simulate->parsed()) pipeline::simulate(config);
        if (calibrate->parsed()) pipeline::calibrate(config);
        if (track->parsed())
            for (const auto& m : methods_of(o, config)) pipeline::track(config, m);
        if (fuse->parsed())
            for (const auto& m : methods_of(o, config)) pipeline::fuse(config, m);
        if (segment->parsed())
            for (const auto& m : methods_of(o, config)) pipeline::segment(config, m);
        if (fit->parsed())
            for (const auto& m : methods_of(o, config)) pipeline::fit_brdf(config, m);
        if (dehl->parsed())
            for (const auto& m : methods_of(o, config)) pipeline::dehighlight(config, m);
        if (evalc->parsed()) {
            std::vector<eval::EvalReport> reports;
            for (const auto& m : methods_of(o, config)) reports.push_back(pipeline::evaluate(config, m));
            write_reports(config, reports);
        }
        if (pipe->parsed()) std::cout << eval::format_table(pipeline::run(config));
        if (render->parsed()) {
            const std::string method = method_of(o, config);
            if (pose_file.empty() && orbit.empty()) {
                pipeline::render(config, method);
                return 0;
            }
            std::vector<Pose> poses;
            if (!pose_file.empty()) poses = read_poses(pose_file);
            if (!orbit.empty()) {
                std::vector<double> v;
                std::stringstream ss(orbit);
                for (std::string tok; std::getline(ss, tok, ',');) v.push_back(std::stod(tok));
                if (v.size() != 6 && v.size() != 8) throw std::invalid_argument("--orbit needs 6 or 8 numbers");
                const auto orb = sim::orbit_trajectory(Vec3(v[0], v[1], v[2]), v[3], v[4], int(v[5]),
                                                       v.size() == 8 ? v[6] : 0.0, v.size() == 8 ? v[7] : 360.0);
                poses.insert(poses.end(), orb.begin(), orb.end());
            }
            const fs::path out = render_out.empty() ? pipeline::method_dir(config, method) / "views" : fs::path(render_out);
            fs::create_directories(out);
            const render::SlfRenderer renderer(pipeline::load_model(config, method));
            const PinholeCamera cam = pipeline::load_camera(config);
            for (size_t i = 0; i < poses.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "view_%04zu", i);
                const auto r = renderer.render(cam, poses[i]);
                io::write_pfm(out / (std::string(name) + ".pfm"), r.color);
                io::write_png(out / (std::string(name) + ".png"), r.color);
            }
            std::cerr << "[render] " << poses.size() << " views in " << out.string() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
