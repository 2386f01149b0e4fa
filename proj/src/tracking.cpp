#include "slf/tracking.hpp"

#include "slf/raster.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <fstream>

namespace slf::tracking {

Pose twist_to_pose(const Vec6& xi) { return Pose::from_axis_angle(xi.head<3>(), xi.tail<3>()); }

PoseError pose_error(const Pose& estimate, const Pose& truth) {
    return {(estimate.t - truth.t).norm(), rotation_angle_between(estimate, truth)};
}

namespace {

Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

// d(exp(xi) p)/d(xi) at xi = 0 for a camera-frame point p.
Eigen::Matrix<double, 3, 6> point_jacobian(const Vec3& p) {
    Eigen::Matrix<double, 3, 6> J;
    J.leftCols<3>() = -skew(p);
    J.rightCols<3>().setIdentity();
    return J;
}

}  // namespace

// --- ICP ------------------------------------------------------------------------------

IcpResult icp_align(const ImageF& live_depth, const ImageF& model_depth, const Image<Vec3f>& model_normals,
                    const PinholeCamera& camera, const Pose& model_pose, const Pose& init, const IcpOptions& opt) {
    if (!live_depth.same_size(camera.width, camera.height) || !model_depth.same_size(live_depth) ||
        !model_normals.same_size(live_depth))
        throw std::invalid_argument("ICP images do not match the camera");
    const Image<Vec3f> live_normals = normals_from_depth(live_depth, camera);
    std::vector<Vec3> pts, nrm;
    for (int y = 0; y < camera.height; y += opt.stride)
        for (int x = 0; x < camera.width; x += opt.stride) {
            if (live_depth(x, y) <= 0 || live_normals(x, y).squaredNorm() == 0) continue;
            pts.push_back(backproject(camera, Vec2(x, y), live_depth(x, y)));
            nrm.push_back(live_normals(x, y).cast<double>());
        }
    const double cos_gate = std::cos(opt.max_normal_angle_deg * kPi / 180.0);
    const Pose to_model = model_pose.inverse();

    IcpResult res;
    res.pose = init;
    for (int it = 0; it < opt.max_iterations; ++it) {
        Mat6 H = Mat6::Zero();
        Vec6 g = Vec6::Zero();
        double se = 0;
        int n = 0;
        for (size_t i = 0; i < pts.size(); ++i) {
            const Vec3 a = res.pose * pts[i];
            const auto px = project(camera, to_model * a);
            if (!px) continue;
            const int u = int(std::lround(px->x())), v = int(std::lround(px->y()));
            if (!model_depth.contains(u, v) || model_depth(u, v) <= 0) continue;
            const Vec3 nq = model_normals(u, v).cast<double>();
            if (nq.squaredNorm() == 0) continue;
            const Vec3 q = model_pose * backproject(camera, Vec2(u, v), model_depth(u, v));
            if ((a - q).norm() > opt.max_distance) continue;
            if ((res.pose.R * nrm[i]).dot(nq) < cos_gate) continue;
            const double r = (a - q).dot(nq);
            Vec6 J;
            J << a.cross(nq), nq;
            H.noalias() += J * J.transpose();
            g += J * r;
            se += r * r;
            ++n;
        }
        res.correspondences = n;
        if (n < opt.min_correspondences)
            throw TrackingLost("ICP found " + std::to_string(n) + " correspondences; tracking lost");
        res.rms = std::sqrt(se / n);
        const Eigen::SelfAdjointEigenSolver<Mat6> es(H);
        const double lmax = es.eigenvalues().maxCoeff();
        Vec6 step = Vec6::Zero();
        res.rank_deficient = false;
        for (int k = 0; k < 6; ++k) {
            const double l = es.eigenvalues()[k];
            if (l <= opt.rank_ratio * lmax) {
                res.rank_deficient = true;
                continue;
            }
            const Vec6 e = es.eigenvectors().col(k);
            step -= e * (e.dot(g) / l);
        }
        res.pose = twist_to_pose(step) * res.pose;
        res.pose.orthonormalize();
        res.iterations = it + 1;
        if (step.norm() < opt.min_update) break;
    }
    return res;
}

// --- image pyramid ----------------------------------------------------------------------

ImageF gradient_magnitude(const ImageF& g) {
    ImageF out(g.width, g.height, 0.0f);
    auto at = [&](int x, int y) {
        return g(std::clamp(x, 0, g.width - 1), std::clamp(y, 0, g.height - 1));
    };
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            const float gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1) - at(x - 1, y - 1) -
                              2 * at(x - 1, y) - at(x - 1, y + 1)) / 8.0f;
            const float gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1) - at(x - 1, y - 1) -
                              2 * at(x, y - 1) - at(x + 1, y - 1)) / 8.0f;
            out(x, y) = std::sqrt(gx * gx + gy * gy);
        }
    return out;
}

namespace {

// Depth step (meters) inside a filter support that marks an occlusion edge.
constexpr float kEdgeDepth = 0.02f;

// [1 2 1]/4 in both directions with clamped borders.
ImageF binomial3(const ImageF& img) {
    ImageF tmp(img.width, img.height), out(img.width, img.height);
    auto cx = [&](int x) { return std::clamp(x, 0, img.width - 1); };
    auto cy = [&](int y) { return std::clamp(y, 0, img.height - 1); };
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            tmp(x, y) = 0.25f * img(cx(x - 1), y) + 0.5f * img(x, y) + 0.25f * img(cx(x + 1), y);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out(x, y) = 0.25f * tmp(x, cy(y - 1)) + 0.5f * tmp(x, y) + 0.25f * tmp(x, cy(y + 1));
    return out;
}

}  // namespace

ImageF downsample(const ImageF& img) {
    static constexpr float k[5] = {1 / 16.f, 4 / 16.f, 6 / 16.f, 4 / 16.f, 1 / 16.f};
    ImageF tmp(img.width, img.height), blur(img.width, img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float s = 0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * img(std::clamp(x + i, 0, img.width - 1), y);
            tmp(x, y) = s;
        }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            float s = 0;
            for (int i = -2; i <= 2; ++i) s += k[i + 2] * tmp(x, std::clamp(y + i, 0, img.height - 1));
            blur(x, y) = s;
        }
    ImageF out(std::max(1, img.width / 2), std::max(1, img.height / 2));
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const int x0 = std::min(2 * x, img.width - 1), x1 = std::min(2 * x + 1, img.width - 1);
            const int y0 = std::min(2 * y, img.height - 1), y1 = std::min(2 * y + 1, img.height - 1);
            out(x, y) = 0.25f * (blur(x0, y0) + blur(x1, y0) + blur(x0, y1) + blur(x1, y1));
        }
    return out;
}

ImageF downsample_depth(const ImageF& d, double tol) {
    ImageF out(std::max(1, d.width / 2), std::max(1, d.height / 2), 0.0f);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            float lo = 1e30f, hi = 0, sum = 0;
            bool ok = true;
            for (int dy = 0; dy < 2 && ok; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int u = 2 * x + dx, v = 2 * y + dy;
                    const float z = d.contains(u, v) ? d(u, v) : 0.0f;
                    if (z <= 0) {
                        ok = false;
                        break;
                    }
                    lo = std::min(lo, z);
                    hi = std::max(hi, z);
                    sum += z;
                }
            if (ok && hi - lo <= tol) out(x, y) = 0.25f * sum;
        }
    return out;
}

namespace {

Mask downsample_mask(const Mask& m) {
    Mask out(std::max(1, m.width / 2), std::max(1, m.height / 2), 0);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            bool ok = true;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    const int u = 2 * x + dx, v = 2 * y + dy;
                    ok = ok && m.contains(u, v) && m(u, v);
                }
            out(x, y) = ok;
        }
    return out;
}

}  // namespace

// --- photometric level -----------------------------------------------------------------------

PhotometricLevel::PhotometricLevel(const ImageF& live_grey, const ImageF& ref_grey, const ImageF& ref_depth,
                                   const Mask& ref_valid, const PinholeCamera& camera, Objective objective,
                                   double reject)
    : camera_(camera), reject_(reject) {
    const bool grad = objective == Objective::GradientMagnitude;
    live_ = grad ? binomial3(gradient_magnitude(live_grey)) : live_grey;
    const ImageF ref = grad ? binomial3(gradient_magnitude(ref_grey)) : ref_grey;
    const int rad = grad ? 2 : 1;
    for (int y = 1; y + 1 < ref.height; ++y)
        for (int x = 1; x + 1 < ref.width; ++x) {
            if (ref_depth(x, y) <= 0) continue;
            // the filter support must lie on one continuous surface of the prediction
            bool ok = true;
            const float z0 = ref_depth(x, y);
            for (int dy = -rad; dy <= rad && ok; ++dy)
                for (int dx = -rad; dx <= rad && ok; ++dx) {
                    const int xx = std::clamp(x + dx, 0, ref.width - 1), yy = std::clamp(y + dy, 0, ref.height - 1);
                    ok = ref_valid(xx, yy) && std::abs(ref_depth(xx, yy) - z0) <= kEdgeDepth;
                }
            if (!ok) continue;
            points_.push_back(backproject(camera_, Vec2(x, y), ref_depth(x, y)));
            values_.push_back(ref(x, y));
        }
}

bool PhotometricLevel::residual(const Pose& T, int i, double& r, Vec6* J) const {
    const Vec3 p = T * points_[size_t(i)];
    if (p.z() <= 1e-6) return false;
    const double u = camera_.fx * p.x() / p.z() + camera_.cx, v = camera_.fy * p.y() / p.z() + camera_.cy;
    const double fx0 = std::floor(u), fy0 = std::floor(v);
    const int x0 = int(fx0), y0 = int(fy0);
    if (x0 < 0 || y0 < 0 || x0 + 1 >= live_.width || y0 + 1 >= live_.height) return false;
    const double ax = u - fx0, ay = v - fy0;
    const double i00 = live_(x0, y0), i10 = live_(x0 + 1, y0), i01 = live_(x0, y0 + 1), i11 = live_(x0 + 1, y0 + 1);
    const double val = (i00 * (1 - ax) + i10 * ax) * (1 - ay) + (i01 * (1 - ax) + i11 * ax) * ay;
    r = values_[size_t(i)] - val;
    if (J) {
        // derivative of the bilinear interpolant inside its cell
        const double du = (1 - ay) * (i10 - i00) + ay * (i11 - i01);
        const double dv = (1 - ax) * (i01 - i00) + ax * (i11 - i10);
        Eigen::Matrix<double, 1, 3> dproj;
        const double iz = 1.0 / p.z();
        dproj << du * camera_.fx * iz, dv * camera_.fy * iz,
            -(du * camera_.fx * p.x() + dv * camera_.fy * p.y()) * iz * iz;
        *J = -(dproj * point_jacobian(p)).transpose();
    }
    return true;
}

double PhotometricLevel::cost(const Pose& T) const {
    const double cap = reject_ * reject_;
    double c = 0;
    int n = 0;
    for (int i = 0; i < pixel_count(); ++i) {
        double r;
        if (!residual(T, i, r, nullptr)) continue;
        c += std::min(r * r, cap);
        ++n;
    }
    return n ? c / n : cap;
}

double PhotometricLevel::normal_equations(const Pose& T, Mat6& H, Vec6& g, int& inliers) const {
    constexpr int kChunk = 4096;
    const int n = pixel_count();
    const int chunks = (n + kChunk - 1) / kChunk;
    std::vector<Mat6> Hs(static_cast<size_t>(chunks), Mat6::Zero());
    std::vector<Vec6> gs(static_cast<size_t>(chunks), Vec6::Zero());
    std::vector<double> cs(static_cast<size_t>(chunks), 0.0);
    std::vector<int> ns(static_cast<size_t>(chunks), 0), us(static_cast<size_t>(chunks), 0);
    const double cap = reject_ * reject_;
    parallel_for(n, kChunk, [&](int b, int e) {
        const auto c = size_t(b / kChunk);
        for (int i = b; i < e; ++i) {
            double r;
            Vec6 J;
            if (!residual(T, i, r, &J)) continue;
            ++us[c];
            if (std::abs(r) > reject_) {
                cs[c] += cap;
                continue;
            }
            Hs[c].noalias() += J * J.transpose();
            gs[c] += J * r;
            cs[c] += r * r;
            ++ns[c];
        }
    });
    H.setZero();
    g.setZero();
    inliers = 0;
    double cost = 0;
    int usable = 0;
    for (int c = 0; c < chunks; ++c) {
        H += Hs[size_t(c)];
        g += gs[size_t(c)];
        cost += cs[size_t(c)];
        inliers += ns[size_t(c)];
        usable += us[size_t(c)];
    }
    return usable ? cost / usable : cap;
}

PhotometricResult photometric_refine(const ImageRgb& live, const ImageRgb& prediction, const ImageF& prediction_depth,
                                     const Mask& prediction_valid, const PinholeCamera& camera,
                                     const Pose& reference_pose, const Pose& init, const PhotometricOptions& opt) {
    if (!live.same_size(camera.width, camera.height) || !prediction.same_size(live) ||
        !prediction_depth.same_size(live) || !prediction_valid.same_size(live))
        throw std::invalid_argument("photometric images do not match the camera");
    if (opt.levels < 1) throw std::invalid_argument("photometric refinement needs at least one level");
    size_t valid = 0;
    for (size_t i = 0; i < prediction_valid.size(); ++i)
        valid += prediction_valid.pixels[i] && prediction_depth.pixels[i] > 0;
    if (double(valid) < opt.min_valid_fraction * double(prediction_valid.size()))
        throw std::invalid_argument("prediction covers too little of the frame for photometric tracking");

    std::vector<ImageF> live_g{to_greyscale(live)}, ref_g{to_greyscale(prediction)}, depth{prediction_depth};
    std::vector<Mask> mask{prediction_valid};
    std::vector<PinholeCamera> cams{camera};
    for (int l = 1; l < opt.levels; ++l) {
        live_g.push_back(downsample(live_g.back()));
        ref_g.push_back(downsample(ref_g.back()));
        depth.push_back(downsample_depth(depth.back()));
        mask.push_back(downsample_mask(mask.back()));
        cams.push_back(cams.back().scaled(0.5));
    }

    PhotometricResult res;
    const Pose T0 = init.inverse() * reference_pose;
    Pose T = T0;
    double finest_initial = 0;
    for (int l = opt.levels - 1; l >= 0; --l) {
        const PhotometricLevel level(live_g[size_t(l)], ref_g[size_t(l)], depth[size_t(l)], mask[size_t(l)],
                                     cams[size_t(l)], opt.objective, opt.reject);
        if (level.pixel_count() == 0) continue;
        if (l == 0) finest_initial = level.cost(T0);
        Mat6 H;
        Vec6 g;
        int inliers = 0;
        double cost = level.normal_equations(T, H, g, inliers);
        if (l == opt.levels - 1) res.initial_cost = cost;
        res.level_costs.push_back({cost});
        for (int it = 0; it < opt.max_iterations; ++it) {
            if (inliers < 6) break;
            Mat6 A = H;
            A.diagonal().array() += 1e-12 * (1.0 + A.diagonal().maxCoeff());
            Vec6 step = A.ldlt().solve(-g);
            if (!step.allFinite()) break;
            // backtrack by halving so that accepted iterates never raise the cost
            Pose trial;
            Mat6 Ht;
            Vec6 gt;
            int nt = 0;
            double ct = 0;
            bool accepted = false;
            for (int halving = 0; halving < 6 && !accepted; ++halving, step *= 0.5) {
                trial = twist_to_pose(step) * T;
                trial.orthonormalize();
                ct = level.normal_equations(trial, Ht, gt, nt);
                accepted = ct <= cost;
            }
            ++res.iterations;
            if (!accepted) break;
            step *= 2;  // undo the last halving for the convergence test
            T = trial;
            res.level_costs.back().push_back(ct);
            H = Ht;
            g = gt;
            cost = ct;
            inliers = nt;
            if (step.norm() < opt.min_update) break;
        }
        if (l == 0) {
            res.final_cost = cost;
            res.valid_pixels = inliers;
        }
    }
    if (res.final_cost > finest_initial) {
        res.diverged = true;
        res.pose = init;
        res.final_cost = finest_initial;
        return res;
    }
    res.pose = reference_pose * T.inverse();
    res.pose.orthonormalize();
    return res;
}

// --- trajectory IO --------------------------------------------------------------------------

void write_trajectory(const std::filesystem::path& path, const std::vector<TrajectoryEntry>& poses) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    for (const auto& e : poses) {
        nlohmann::json j;
        j["frame"] = e.frame;
        std::vector<double> R(9);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) R[size_t(3 * r + c)] = e.pose.R(r, c);
        j["R"] = R;
        j["t"] = {e.pose.t.x(), e.pose.t.y(), e.pose.t.z()};
        f << j.dump() << "\n";
    }
}

std::vector<TrajectoryEntry> read_trajectory(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path.string());
    std::vector<TrajectoryEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            TrajectoryEntry e;
            e.frame = j.at("frame").get<int>();
            const auto R = j.at("R").get<std::vector<double>>();
            const auto t = j.at("t").get<std::vector<double>>();
            if (R.size() != 9 || t.size() != 3) throw Error("bad pose arity");
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) e.pose.R(r, c) = R[size_t(3 * r + c)];
            e.pose.t = Vec3(t[0], t[1], t[2]);
            e.pose.validate();
            out.push_back(e);
        } catch (const std::exception& ex) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
    }
    return out;
}

}  // namespace slf::tracking
