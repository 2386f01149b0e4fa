#include "slf/eval.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace slf::eval {

namespace {

void check_sizes(const ImageF& a, const ImageF& b, const Mask& m) {
    if (!a.same_size(b) || !a.same_size(m)) throw std::invalid_argument("evaluation images differ in size");
}

// Variances at or below this count as flat patches.
constexpr double kFlat = 1e-12;

}  // namespace

double rmse(const ImageF& rendered, const ImageF& truth, const Mask& mask) {
    check_sizes(rendered, truth, mask);
    double se = 0;
    size_t n = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
        if (!mask.pixels[i]) continue;
        const double d = double(rendered.pixels[i]) - double(truth.pixels[i]);
        se += d * d;
        ++n;
    }
    if (n == 0) throw std::invalid_argument("RMSE over an empty mask");
    return std::sqrt(se / double(n));
}

double rmse(const ImageRgb& rendered, const ImageRgb& truth, const Mask& mask) {
    return rmse(to_greyscale(rendered), to_greyscale(truth), mask);
}

double one_minus_ncc(const ImageF& rendered, const ImageF& truth, const Mask& mask, int patch) {
    check_sizes(rendered, truth, mask);
    if (patch != 3 && patch != 5 && patch != 7) throw std::invalid_argument("NCC patch must be 3, 5 or 7");
    const int r = patch / 2;
    const int w = mask.width, h = mask.height;

    // a pixel is a usable center when its whole window is inside the image and masked
    Mask ok(w, h, 0);
    {
        // horizontal then vertical run check of the mask
        Mask row(w, h, 0);
        for (int y = 0; y < h; ++y)
            for (int x = r; x < w - r; ++x) {
                bool all = true;
                for (int k = -r; k <= r && all; ++k) all = mask(x + k, y) != 0;
                row(x, y) = all;
            }
        for (int y = r; y < h - r; ++y)
            for (int x = r; x < w - r; ++x) {
                bool all = true;
                for (int k = -r; k <= r && all; ++k) all = row(x, y + k) != 0;
                ok(x, y) = all;
            }
    }

    const double n = double(patch * patch);
    double total = 0;
    size_t count = 0;
    for (int y = r; y < h - r; ++y)
        for (int x = r; x < w - r; ++x) {
            if (!ok(x, y)) continue;
            double sa = 0, sb = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    sa += rendered(x + dx, y + dy);
                    sb += truth(x + dx, y + dy);
                }
            const double ma = sa / n, mb = sb / n;
            double saa = 0, sbb = 0, sab = 0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double a = rendered(x + dx, y + dy) - ma;
                    const double b = truth(x + dx, y + dy) - mb;
                    saa += a * a;
                    sbb += b * b;
                    sab += a * b;
                }
            if (saa <= kFlat * n || sbb <= kFlat * n) continue;
            total += std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
            ++count;
        }
    if (count == 0) throw Error("no textured patch of size " + std::to_string(patch) + " inside the mask");
    return 1.0 - total / double(count);
}

double one_minus_ncc(const ImageRgb& rendered, const ImageRgb& truth, const Mask& mask, int patch) {
    return one_minus_ncc(to_greyscale(rendered), to_greyscale(truth), mask, patch);
}

ViewError evaluate_view(const ImageRgb& rendered, const ImageRgb& truth, const Mask& mask, int frame) {
    ImageF a(rendered.width, rendered.height);
    // clamp per channel first so an over-bright channel does not leak into luma
    for (size_t i = 0; i < a.size(); ++i) a.pixels[i] = greyscale(rendered.pixels[i].cwiseMax(0.0f).cwiseMin(1.0f));
    const ImageF b = to_greyscale(truth);
    ViewError e;
    e.frame = frame;
    e.rmse = rmse(a, b, mask);
    for (size_t k = 0; k < kPatchSizes.size(); ++k) e.one_minus_ncc[k] = one_minus_ncc(a, b, mask, kPatchSizes[k]);
    size_t valid = 0;
    for (auto m : mask.pixels) valid += m != 0;
    e.valid_fraction = double(valid) / double(mask.size());
    return e;
}

double EvalReport::mean_rmse() const {
    if (views.empty()) return 0;
    double s = 0;
    for (const auto& v : views) s += v.rmse;
    return s / double(views.size());
}

double EvalReport::mean_ncc(size_t patch_index) const {
    if (views.empty()) return 0;
    double s = 0;
    for (const auto& v : views) s += v.one_minus_ncc.at(patch_index);
    return s / double(views.size());
}

double EvalReport::mean_valid_fraction() const {
    if (views.empty()) return 0;
    double s = 0;
    for (const auto& v : views) s += v.valid_fraction;
    return s / double(views.size());
}

std::string to_json(const std::vector<EvalReport>& reports) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& r : reports) {
        nlohmann::ordered_json j;
        j["method"] = r.method;
        j["mean"] = {{"rmse", r.mean_rmse()},
                     {"one_minus_ncc", {{"3", r.mean_ncc(0)}, {"5", r.mean_ncc(1)}, {"7", r.mean_ncc(2)}}},
                     {"valid_fraction", r.mean_valid_fraction()}};
        j["views"] = nlohmann::ordered_json::array();
        for (const auto& v : r.views)
            j["views"].push_back({{"frame", v.frame},
                                  {"rmse", v.rmse},
                                  {"one_minus_ncc",
                                   {{"3", v.one_minus_ncc[0]}, {"5", v.one_minus_ncc[1]}, {"7", v.one_minus_ncc[2]}}},
                                  {"valid_fraction", v.valid_fraction}});
        out.push_back(std::move(j));
    }
    return out.dump(2);
}

std::vector<EvalReport> reports_from_json(const std::string& text) {
    std::vector<EvalReport> out;
    try {
        for (const auto& j : nlohmann::json::parse(text)) {
            EvalReport r;
            r.method = j.at("method").get<std::string>();
            for (const auto& v : j.at("views")) {
                ViewError e;
                e.frame = v.at("frame").get<int>();
                e.rmse = v.at("rmse").get<double>();
                for (size_t k = 0; k < kPatchSizes.size(); ++k)
                    e.one_minus_ncc[k] = v.at("one_minus_ncc").at(std::to_string(kPatchSizes[k])).get<double>();
                e.valid_fraction = v.at("valid_fraction").get<double>();
                r.views.push_back(e);
            }
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed evaluation report: ") + e.what());
    }
    return out;
}

std::string format_table(const std::vector<EvalReport>& reports) {
    std::ostringstream os;
    char buf[64];
    auto cell = [&](const std::string& s, int width) {
        std::snprintf(buf, sizeof buf, "%-*s", width, s.c_str());
        os << buf;
    };
    constexpr int kLabel = 14, kCol = 14;
    cell("", kLabel);
    for (const auto& r : reports) cell(r.method, kCol);
    os << "\n";
    auto row = [&](const std::string& label, auto value) {
        cell(label, kLabel);
        for (const auto& r : reports) {
            std::snprintf(buf, sizeof buf, "%.4f", value(r));
            cell(std::string(buf), kCol);
        }
        os << "\n";
    };
    row("RMSE", [](const EvalReport& r) { return r.mean_rmse(); });
    for (size_t k = 0; k < kPatchSizes.size(); ++k) {
        const std::string label = "1-NCC(" + std::to_string(kPatchSizes[k]) + "x" + std::to_string(kPatchSizes[k]) + ")";
        row(label, [k](const EvalReport& r) { return r.mean_ncc(k); });
    }
    row("valid", [](const EvalReport& r) { return r.mean_valid_fraction(); });
    return os.str();
}

}  // namespace slf::eval
