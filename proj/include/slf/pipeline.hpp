#pragma once

// Stage wiring for the full reconstruction: simulate, calibrate, track,
// fuse, segment, fit-brdf, dehighlight, render, eval. Every stage reads its
// inputs from the output directory and writes its results there, so any
// stage can be rerun on its own.

#include "slf/eval.hpp"
#include "slf/slfrender.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace slf::pipeline {

/// Raised by a stage; what() is prefixed with the stage name.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message);
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Effective configuration: defaults merged with user overrides.
class Config {
public:
    /// Documented defaults for every stage.
    static nlohmann::json defaults();
    Config();
    /// Merges `overrides` into the defaults. Unknown keys and type
    /// mismatches throw std::invalid_argument.
    explicit Config(const nlohmann::json& overrides);
    static Config load(const std::filesystem::path& path);

    const nlohmann::json& json() const { return json_; }
    std::string dump() const { return json_.dump(2); }

    std::filesystem::path output() const;
    /// Tracking variants to run; more than one yields a comparison report.
    std::vector<std::string> methods() const;
    bool held_out(int frame) const;

private:
    nlohmann::json json_;
};

// --- individual stages ----------------------------------------------------------------
// `method` selects the tracking variant directory ("full", "icp" or "ground_truth").

void simulate(const Config& config);
void calibrate(const Config& config);
void track(const Config& config, const std::string& method);
void fuse(const Config& config, const std::string& method);
void segment(const Config& config, const std::string& method);
void fit_brdf(const Config& config, const std::string& method);
void dehighlight(const Config& config, const std::string& method);
/// Renders the held-out views.
void render(const Config& config, const std::string& method);
eval::EvalReport evaluate(const Config& config, const std::string& method);

/// All stages in order for every configured method; writes eval/report.json
/// and eval/report.txt and returns the reports.
std::vector<eval::EvalReport> run(const Config& config);

// --- artifact access -----------------------------------------------------------------

/// The reconstruction of one method as a renderable model.
render::SlfModel load_model(const Config& config, const std::string& method);
/// Camera used for all frames of the main sequence.
PinholeCamera load_camera(const Config& config);
/// Directory holding the artifacts of one method.
std::filesystem::path method_dir(const Config& config, const std::string& method);

}  // namespace slf::pipeline
