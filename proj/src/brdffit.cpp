#include "slf/brdffit.hpp"

#include "slf/io.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <fstream>
#include <map>
#include <set>

namespace slf::brdf {

const char* to_string(FitStatus s) {
    switch (s) {
        case FitStatus::Converged: return "converged";
        case FitStatus::MaxIterations: return "max-iterations";
        case FitStatus::DiffuseOnly: return "diffuse-only";
    }
    return "unknown";
}

namespace {

const double kLogAlphaMin = std::log(WardParams::kAlphaMin);
const double kLogAlphaMax = std::log(WardParams::kAlphaMax);

// LM works on q = rho/pi + f_s; q is floored so the gamma power stays differentiable.
constexpr double kMinQ = 1e-12;

}  // namespace

SegmentProblem::SegmentProblem(const std::vector<IrSample>& samples, const ircalib::IrCalibration& calib,
                               const FitOptions& options)
    : kappa_(calib.kappa), gamma_(calib.gamma), isotropic_(options.isotropic) {
    if (int(samples.size()) < options.min_samples)
        throw std::invalid_argument("segment fit needs at least " + std::to_string(options.min_samples) + " samples");
    if (!(kappa_ > 0) || !(gamma_ > 0)) throw std::invalid_argument("invalid IR calibration");
    if (!isotropic_ && !options.frame) throw std::invalid_argument("anisotropic fit needs a tangent frame");
    std::set<int> frames;
    for (const auto& s : samples) {
        if (s.n_dot_l() <= 0 || s.n_dot_v() <= 0 || !(s.d > 0))
            throw std::invalid_argument("IR sample is back-facing or has no distance");
        frames.insert(s.frame);
    }
    const bool per_point = options.mode == AlbedoMode::PerPoint;
    if (per_point && frames.size() < 2)
        throw std::invalid_argument("per-point albedo needs samples from at least two frames");

    std::map<int, int> group_of;
    for (const auto& s : samples) {
        if (s.L >= options.saturation) continue;
        group_of.emplace(per_point ? s.point_id : -1, 0);
    }
    for (auto& [id, g] : group_of) {
        g = int(group_ids_.size());
        group_ids_.push_back(id);
    }
    for (const auto& s : samples) {
        if (s.L >= options.saturation) continue;
        Item it;
        it.L = s.L;
        it.shading = kappa_ * s.n_dot_l() / (s.d * s.d);
        it.group = group_of.at(per_point ? s.point_id : -1);
        it.frame = isotropic_ ? TangentFrame::from_normal(s.n) : TangentFrame::from_tangent(s.n, options.frame->tangent);
        it.v = s.v;
        it.l = s.l;
        samples_.push_back(it);
    }
    if (samples_.size() < 2) throw std::invalid_argument("segment fit has no unsaturated samples");
}

Eigen::VectorXd SegmentProblem::pack(const WardParams& w, const std::vector<double>& rho) const {
    if (int(rho.size()) != groups()) throw std::invalid_argument("albedo vector does not match the groups");
    Eigen::VectorXd x(size());
    x[0] = w.rho_s;
    x[1] = std::log(w.alpha_x);
    if (!isotropic_) x[2] = std::log(w.alpha_y);
    for (int g = 0; g < groups(); ++g) x[beta_size() + g] = rho[size_t(g)];
    return x;
}

WardParams SegmentProblem::unpack_ward(const Eigen::VectorXd& x) const {
    if (isotropic_) return WardParams::iso(x[0], std::exp(x[1]));
    return WardParams::aniso(x[0], std::exp(x[1]), std::exp(x[2]));
}

void SegmentProblem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) const {
    const WardParams w = unpack_ward(x);
    const int p = beta_size();
    r.resize(sample_count());
    if (J) J->setZero(sample_count(), size());
    for (int i = 0; i < sample_count(); ++i) {
        const Item& s = samples_[size_t(i)];
        const WardDerivatives wd = ward_eval_derivatives(w, s.frame, s.v, s.l);
        const double q = std::max(x[p + s.group] / kPi + wd.value, kMinQ);
        const double m = std::pow(s.shading * q, gamma_);
        r[i] = s.L - m;
        if (!J) continue;
        const double dq = -gamma_ * m / q;
        (*J)(i, 0) = dq * wd.d_rho_s;
        if (isotropic_) {
            (*J)(i, 1) = dq * wd.d_log_alpha;
        } else {
            (*J)(i, 1) = dq * wd.d_log_alpha_x;
            (*J)(i, 2) = dq * wd.d_log_alpha_y;
        }
        (*J)(i, p + s.group) = dq / kPi;
    }
}

double SegmentProblem::cost(const Eigen::VectorXd& x) const {
    Eigen::VectorXd r;
    evaluate(x, r);
    return r.squaredNorm();
}

SegmentProblem::Normal SegmentProblem::normal_equations(const Eigen::VectorXd& x) const {
    const WardParams w = unpack_ward(x);
    const int p = beta_size(), G = groups();
    Normal ne;
    ne.B.setZero(p, p);
    ne.C.setZero(p, G);
    ne.D.setZero(G);
    ne.g_beta.setZero(p);
    ne.g_rho.setZero(G);
    Eigen::Vector3d jb;
    for (const Item& s : samples_) {
        const WardDerivatives wd = ward_eval_derivatives(w, s.frame, s.v, s.l);
        const double q = std::max(x[p + s.group] / kPi + wd.value, kMinQ);
        const double m = std::pow(s.shading * q, gamma_);
        const double r = s.L - m;
        const double dq = -gamma_ * m / q;
        jb[0] = dq * wd.d_rho_s;
        if (isotropic_) {
            jb[1] = dq * wd.d_log_alpha;
        } else {
            jb[1] = dq * wd.d_log_alpha_x;
            jb[2] = dq * wd.d_log_alpha_y;
        }
        const double jr = dq / kPi;
        const auto b = jb.head(p);
        ne.B.noalias() += b * b.transpose();
        ne.C.col(s.group) += b * jr;
        ne.D[s.group] += jr * jr;
        ne.g_beta += b * r;
        ne.g_rho[s.group] += jr * r;
        ne.cost += r * r;
    }
    return ne;
}

Eigen::VectorXd SegmentProblem::linear_solve(const WardParams& w, bool with_specular) const {
    // In the inverse-gamma domain the model is linear: y = rho_g / pi + rho_s f1.
    const int G = groups();
    const size_t N = samples_.size();
    WardParams unit = w;
    unit.rho_s = 1.0;
    std::vector<double> y(N), f1(N);
    std::vector<double> ybar(static_cast<size_t>(G), 0.0), fbar(size_t(G), 0.0);
    std::vector<int> count(static_cast<size_t>(G), 0);
    for (size_t i = 0; i < N; ++i) {
        const Item& s = samples_[i];
        y[i] = std::pow(std::max(s.L, 0.0), 1.0 / gamma_) / s.shading;
        f1[i] = with_specular ? ward_eval(unit, s.frame, s.v, s.l) : 0.0;
        ybar[size_t(s.group)] += y[i];
        fbar[size_t(s.group)] += f1[i];
        ++count[size_t(s.group)];
    }
    for (int g = 0; g < G; ++g) {
        ybar[size_t(g)] /= std::max(count[size_t(g)], 1);
        fbar[size_t(g)] /= std::max(count[size_t(g)], 1);
    }
    double num = 0, den = 0;
    for (size_t i = 0; i < N; ++i) {
        const auto g = size_t(samples_[i].group);
        num += (y[i] - ybar[g]) * (f1[i] - fbar[g]);
        den += (f1[i] - fbar[g]) * (f1[i] - fbar[g]);
    }
    const double rho_s = den > 0 ? std::clamp(num / den, WardParams::kRhoMin, WardParams::kRhoMax) : 0.0;
    WardParams out = w;
    out.rho_s = rho_s;
    std::vector<double> rho(static_cast<size_t>(G));
    for (int g = 0; g < G; ++g)
        rho[size_t(g)] = std::max(0.0, kPi * (ybar[size_t(g)] - rho_s * fbar[size_t(g)]));
    return pack(out, rho);
}

Eigen::VectorXd SegmentProblem::initial_guess() const {
    Eigen::VectorXd best;
    double best_cost = std::numeric_limits<double>::infinity();
    const int steps = isotropic_ ? 25 : 13;
    auto alpha_at = [&](int k) { return std::exp(kLogAlphaMin + (kLogAlphaMax - kLogAlphaMin) * k / (steps - 1)); };
    for (int a = 0; a < steps; ++a)
        for (int b = 0; b < (isotropic_ ? 1 : steps); ++b) {
            const WardParams w = isotropic_ ? WardParams::iso(1, alpha_at(a)) : WardParams::aniso(1, alpha_at(a), alpha_at(b));
            const Eigen::VectorXd x = linear_solve(w, true);
            const double c = cost(x);
            if (c < best_cost) {
                best_cost = c;
                best = x;
            }
        }
    return best;
}

Eigen::VectorXd SegmentProblem::diffuse_only() const {
    WardParams w = isotropic_ ? WardParams::iso(0, 0.1) : WardParams::aniso(0, 0.1, 0.1);
    return linear_solve(w, false);
}

bool SegmentProblem::has_specular_signal(double cutoff_deg) const {
    const double c = std::cos(cutoff_deg * kPi / 180.0);
    for (const Item& s : samples_)
        if ((s.v + s.l).normalized().dot(s.frame.normal) >= c) return true;
    return false;
}

namespace {

struct LmOutcome {
    Eigen::VectorXd x;
    double cost = 0;
    int iterations = 0;
    bool converged = false;
};

double lower_bound(int k, int p) { return k == 0 ? WardParams::kRhoMin : k < p ? kLogAlphaMin : 0.0; }
double upper_bound(int k, int p) {
    return k == 0 ? WardParams::kRhoMax : k < p ? kLogAlphaMax : std::numeric_limits<double>::infinity();
}

// Bounded LM: variables sitting on a bound whose descent direction points
// outward are frozen for the step; the remaining system is solved through
// the Schur complement of the diagonal albedo block.
LmOutcome run_lm(const SegmentProblem& prob, Eigen::VectorXd x, const FitOptions& opt, bool freeze_beta) {
    const int p = prob.beta_size(), G = prob.groups();
    auto project = [&](Eigen::VectorXd& v) {
        for (int k = 0; k < v.size(); ++k) v[k] = std::clamp(v[k], lower_bound(k, p), upper_bound(k, p));
    };
    project(x);
    LmOutcome out;
    double lambda = opt.lambda0;
    auto ne = prob.normal_equations(x);
    double cost = ne.cost;
    int it = 0;
    for (; it < opt.max_iterations; ++it) {
        if (cost <= 1e-30) {
            out.converged = true;
            break;
        }
        // active set
        std::vector<bool> free_beta(static_cast<size_t>(p), !freeze_beta);
        for (int k = 0; k < p && !freeze_beta; ++k) {
            const double descent = -ne.g_beta[k];
            if ((x[k] <= lower_bound(k, p) && descent < 0) || (x[k] >= upper_bound(k, p) && descent > 0))
                free_beta[size_t(k)] = false;
            if (ne.B(k, k) <= 1e-300) free_beta[size_t(k)] = false;
        }
        // roughness is meaningless without a lobe
        if (x[0] <= 0 && !free_beta[0])
            for (int k = 1; k < p; ++k) free_beta[size_t(k)] = false;
        std::vector<bool> free_rho(static_cast<size_t>(G));
        for (int g = 0; g < G; ++g) {
            const double descent = -ne.g_rho[g];
            free_rho[size_t(g)] = ne.D[g] > 0 && !(x[p + g] <= 0 && descent < 0);
        }

        Eigen::VectorXd Dd(G);
        for (int g = 0; g < G; ++g) Dd[g] = free_rho[size_t(g)] ? ne.D[g] * (1.0 + lambda) : 0.0;
        Eigen::MatrixXd S = ne.B;
        S.diagonal() += lambda * ne.B.diagonal();
        Eigen::VectorXd rhs = -ne.g_beta;
        for (int g = 0; g < G; ++g) {
            if (!free_rho[size_t(g)]) continue;
            const auto c = ne.C.col(g);
            S.noalias() -= c * c.transpose() / Dd[g];
            rhs += c * (ne.g_rho[g] / Dd[g]);
        }
        for (int k = 0; k < p; ++k)
            if (!free_beta[size_t(k)]) {
                S.row(k).setZero();
                S.col(k).setZero();
                S(k, k) = 1;
                rhs[k] = 0;
            }
        S.diagonal().array() += 1e-14 * (1.0 + S.diagonal().cwiseAbs().maxCoeff());
        const Eigen::VectorXd db = S.ldlt().solve(rhs);
        Eigen::VectorXd step = Eigen::VectorXd::Zero(prob.size());
        step.head(p) = db;
        for (int g = 0; g < G; ++g)
            if (free_rho[size_t(g)]) step[p + g] = (-ne.g_rho[g] - ne.C.col(g).dot(db)) / Dd[g];

        Eigen::VectorXd trial = x + step;
        project(trial);
        const double trial_cost = prob.cost(trial);
        if (trial_cost < cost) {
            const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
            const double moved = (trial - x).norm();
            x = trial;
            ne = prob.normal_equations(x);
            cost = ne.cost;
            lambda = std::max(lambda / 10.0, 1e-12);
            if (rel < opt.relative_tolerance || moved < 1e-14) {
                out.converged = true;
                ++it;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e10) {
                // no descent left from the current iterate
                out.converged = true;
                ++it;
                break;
            }
        }
    }
    out.x = x;
    out.cost = cost;
    out.iterations = it;
    return out;
}

}  // namespace

FitResult fit_segment(const std::vector<IrSample>& samples, const ircalib::IrCalibration& calib,
                      const FitOptions& options) {
    const SegmentProblem prob(samples, calib, options);
    const bool specular = prob.has_specular_signal(options.specular_cutoff_deg);
    const LmOutcome lm = specular ? run_lm(prob, prob.initial_guess(), options, false)
                                  : run_lm(prob, prob.diffuse_only(), options, true);

    FitResult res;
    res.iterations = lm.iterations;
    res.cost = lm.cost;
    res.status = !specular ? FitStatus::DiffuseOnly : lm.converged ? FitStatus::Converged : FitStatus::MaxIterations;

    MaterialModel& m = res.model;
    m.segment = samples.front().segment;
    m.ward = prob.unpack_ward(lm.x);
    m.rms = std::sqrt(lm.cost / prob.sample_count());
    const int p = prob.beta_size();
    res.point_ids = prob.group_ids();
    res.point_rho.resize(size_t(prob.groups()));
    for (int g = 0; g < prob.groups(); ++g) res.point_rho[size_t(g)] = lm.x[p + g];
    double sum = 0;
    for (double r : res.point_rho) sum += r;
    m.rho = sum / double(res.point_rho.size());

    if (!options.isotropic) {
        TangentFrame f = *options.frame;
        if (m.ward.alpha_x < m.ward.alpha_y) {
            // keep the wider axis as the tangent
            std::swap(m.ward.alpha_x, m.ward.alpha_y);
            const Vec3 t = f.binormal;
            f.binormal = f.normal.cross(t);
            f.tangent = t;
        }
        m.frame = f;
    }
    return res;
}

// --- slices --------------------------------------------------------------------

namespace {

std::vector<float> gaussian_kernel(double sigma) {
    const int r = std::max(1, int(std::ceil(3 * sigma)));
    std::vector<float> k(size_t(2 * r + 1));
    double sum = 0;
    for (int i = -r; i <= r; ++i) sum += k[size_t(i + r)] = float(std::exp(-0.5 * i * i / (sigma * sigma)));
    for (auto& v : k) v = float(v / sum);
    return k;
}

ImageF blur(const ImageF& in, const std::vector<float>& k) {
    const int r = int(k.size() / 2);
    ImageF tmp(in.width, in.height), out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            float s = 0;
            for (int i = -r; i <= r; ++i)
                if (x + i >= 0 && x + i < in.width) s += k[size_t(i + r)] * in(x + i, y);
            tmp(x, y) = s;
        }
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            float s = 0;
            for (int i = -r; i <= r; ++i)
                if (y + i >= 0 && y + i < in.height) s += k[size_t(i + r)] * tmp(x, y + i);
            out(x, y) = s;
        }
    return out;
}

}  // namespace

BrdfSlice build_brdf_slice(const std::vector<IrSample>& samples, const ircalib::IrCalibration* calib,
                           const SliceOptions& opt) {
    if (int(samples.size()) < opt.min_samples)
        throw std::invalid_argument("a BRDF slice needs at least " + std::to_string(opt.min_samples) + " samples");
    if (opt.size < 3 || !(opt.radius > 0) || !(opt.sigma_cells > 0)) throw std::invalid_argument("bad slice options");
    const auto ref = std::max_element(samples.begin(), samples.end(),
                                      [](const IrSample& a, const IrSample& b) { return a.h.dot(a.n) < b.h.dot(b.n); });
    BrdfSlice s;
    s.size = opt.size;
    s.radius = opt.radius;
    s.reference_normal = ref->n.normalized();
    s.axis_u = s.reference_normal.unitOrthogonal();
    s.axis_v = s.reference_normal.cross(s.axis_u);

    ImageF sum(s.size, s.size, 0.0f), weight(s.size, s.size, 0.0f);
    for (const auto& smp : samples) {
        double value = smp.L;
        if (calib) {
            const double shading = calib->kappa * smp.n_dot_l() / (smp.d * smp.d);
            if (!(shading > 0)) continue;
            value = std::pow(std::max(smp.L, 0.0), 1.0 / calib->gamma) / shading;
        }
        const Vec2 g = s.to_grid(slice_position(s, smp));
        const int x0 = int(std::floor(g.x())), y0 = int(std::floor(g.y()));
        const double ax = g.x() - x0, ay = g.y() - y0;
        for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
                const int x = x0 + dx, y = y0 + dy;
                if (!sum.contains(x, y)) continue;
                const auto wt = float((dx ? ax : 1 - ax) * (dy ? ay : 1 - ay));
                sum(x, y) += wt * float(value);
                weight(x, y) += wt;
            }
    }
    const auto k = gaussian_kernel(opt.sigma_cells);
    const ImageF bs = blur(sum, k), bw = blur(weight, k);
    s.value = ImageF(s.size, s.size, 0.0f);
    s.valid = Mask(s.size, s.size, 0);
    int disc = 0, covered = 0;
    for (int y = 0; y < s.size; ++y)
        for (int x = 0; x < s.size; ++x) {
            const bool ok = bw(x, y) >= opt.min_weight;
            if (ok) {
                s.value(x, y) = bs(x, y) / bw(x, y);
                s.valid(x, y) = 1;
            }
            if (s.to_plane(Vec2(x, y)).norm() <= opt.coverage_radius) {
                ++disc;
                covered += ok;
            }
        }
    s.coverage = disc ? double(covered) / disc : 0.0;
    if (s.coverage < opt.min_coverage)
        throw InsufficientViews("BRDF slice covers " + std::to_string(int(100 * s.coverage)) +
                                "% of the lobe region; add views");
    return s;
}

Vec2 slice_position(const BrdfSlice& s, const IrSample& smp) {
    const Vec3 w = s.reference_normal + smp.h - smp.n;
    return Vec2(w.dot(s.axis_u), w.dot(s.axis_v));
}

double symmetry_score(const BrdfSlice& s, double phi) {
    const Vec2 a(std::cos(phi), std::sin(phi));
    double acc = 0;
    long n = 0;
    for (int y = 0; y < s.size; ++y)
        for (int x = 0; x < s.size; ++x) {
            if (!s.valid(x, y)) continue;
            const Vec2 p = s.to_plane(Vec2(x, y));
            const Vec2 g = s.to_grid(2.0 * p.dot(a) * a - p);
            const int x0 = int(std::floor(g.x())), y0 = int(std::floor(g.y()));
            if (x0 < 0 || y0 < 0 || x0 + 1 >= s.size || y0 + 1 >= s.size) continue;
            if (!s.valid(x0, y0) || !s.valid(x0 + 1, y0) || !s.valid(x0, y0 + 1) || !s.valid(x0 + 1, y0 + 1)) continue;
            float m = 0;
            sample_bilinear(s.value, g.x(), g.y(), m);
            const double d = double(s.value(x, y)) - m;
            acc += d * d;
            ++n;
        }
    return n ? -acc / double(n) : -std::numeric_limits<double>::infinity();
}

double tangent_angle(const BrdfSlice& s, const Vec3& t) {
    double phi = std::atan2(t.dot(s.axis_v), t.dot(s.axis_u));
    phi = std::fmod(phi, kPi);
    if (phi < 0) phi += kPi;
    return phi;
}

TangentFrame fit_tangent(const BrdfSlice& s, const TangentOptions& opt) {
    if (s.value.empty()) throw std::invalid_argument("empty BRDF slice");
    const double step = opt.scan_step_deg * kPi / 180.0;
    const int n = std::max(4, int(std::round(kPi / step)));
    double best_phi = 0, best = -std::numeric_limits<double>::infinity(), worst = -best;
    for (int i = 0; i < n; ++i) {
        const double phi = kPi * i / n;
        const double sc = symmetry_score(s, phi);
        if (sc > best) best = sc, best_phi = phi;
        worst = std::min(worst, sc);
    }
    double mean = 0, var = 0;
    int cnt = 0;
    for (size_t i = 0; i < s.value.size(); ++i)
        if (s.valid.pixels[i]) mean += s.value.pixels[i], ++cnt;
    if (cnt == 0) throw std::invalid_argument("BRDF slice has no valid cells");
    mean /= cnt;
    for (size_t i = 0; i < s.value.size(); ++i)
        if (s.valid.pixels[i]) var += (s.value.pixels[i] - mean) * (s.value.pixels[i] - mean);
    var /= cnt;
    if (!std::isfinite(best) || best - worst < opt.flatness * var)
        throw TangentUndetermined("BRDF slice is nearly isotropic; the tangent is undetermined");

    // 1-D Nelder-Mead on -score
    auto f = [&](double phi) { return -symmetry_score(s, phi); };
    double x0 = best_phi, x1 = best_phi + 0.5 * kPi / n;
    double f0 = f(x0), f1 = f(x1);
    for (int it = 0; it < 200 && std::abs(x1 - x0) > 1e-6; ++it) {
        if (f1 < f0) std::swap(x0, x1), std::swap(f0, f1);
        const double xr = 2 * x0 - x1, fr = f(xr);
        if (fr < f0) {
            const double xe = 3 * x0 - 2 * x1, fe = f(xe);
            if (fe < fr) x1 = xe, f1 = fe;
            else x1 = xr, f1 = fr;
        } else {
            const double xc = 0.5 * (x0 + x1), fc = f(xc);
            if (fc < f1) x1 = xc, f1 = fc;
            else x1 = 0.5 * (x0 + x1), f1 = f(x1);  // shrink toward the best vertex
        }
    }
    double phi = f1 < f0 ? x1 : x0;

    // pick the wider lobe axis among the two mirror axes
    std::vector<float> vals;
    for (size_t i = 0; i < s.value.size(); ++i)
        if (s.valid.pixels[i]) vals.push_back(s.value.pixels[i]);
    std::nth_element(vals.begin(), vals.begin() + std::ptrdiff_t(vals.size() / 2), vals.end());
    const double median = vals[vals.size() / 2];
    const Vec2 a(std::cos(phi), std::sin(phi)), b(-a.y(), a.x());
    double ia = 0, ib = 0;
    for (int y = 0; y < s.size; ++y)
        for (int x = 0; x < s.size; ++x) {
            if (!s.valid(x, y)) continue;
            const double w = std::max(0.0, s.value(x, y) - median);
            const Vec2 p = s.to_plane(Vec2(x, y));
            ia += w * p.dot(a) * p.dot(a);
            ib += w * p.dot(b) * p.dot(b);
        }
    if (ib > ia) phi += 0.5 * kPi;

    TangentFrame frame;
    frame.normal = s.reference_normal;
    frame.tangent = (std::cos(phi) * s.axis_u + std::sin(phi) * s.axis_v).normalized();
    frame.binormal = frame.normal.cross(frame.tangent);
    return frame;
}

// --- serialization ---------------------------------------------------------------

void write_materials(const std::filesystem::path& path, const std::vector<MaterialModel>& materials) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : materials) {
        nlohmann::json j;
        j["segment"] = m.segment;
        j["rho_s"] = m.ward.rho_s;
        j["alpha_x"] = m.ward.alpha_x;
        j["alpha_y"] = m.ward.alpha_y;
        j["isotropic"] = m.ward.isotropic;
        j["rms"] = m.rms;
        if (m.rho_map.empty()) {
            j["rho"] = m.rho;
        } else {
            const std::string name = path.stem().string() + "_rho_" + std::to_string(m.segment) + ".pfm";
            ImageF row(int(m.rho_map.size()), 1);
            for (size_t i = 0; i < m.rho_map.size(); ++i) row.pixels[i] = float(m.rho_map[i]);
            io::write_pfm(path.parent_path() / name, row);
            j["rho"] = name;
            j["rho_mean"] = m.rho;
        }
        if (m.frame) {
            j["tangent"] = {m.frame->tangent.x(), m.frame->tangent.y(), m.frame->tangent.z()};
            j["normal"] = {m.frame->normal.x(), m.frame->normal.y(), m.frame->normal.z()};
        } else {
            j["tangent"] = nullptr;
        }
        arr.push_back(j);
    }
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << arr.dump(2) << "\n";
}

std::vector<MaterialModel> read_materials(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read " + path.string());
    nlohmann::json arr;
    try {
        f >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
    std::vector<MaterialModel> out;
    for (const auto& j : arr) {
        MaterialModel m;
        m.segment = j.at("segment").get<int>();
        const bool iso = j.value("isotropic", true);
        const double ax = j.at("alpha_x").get<double>();
        m.ward = iso ? WardParams::iso(j.at("rho_s").get<double>(), ax)
                     : WardParams::aniso(j.at("rho_s").get<double>(), ax, j.at("alpha_y").get<double>());
        m.rms = j.value("rms", 0.0);
        const auto& rho = j.at("rho");
        if (rho.is_string()) {
            const ImageF row = io::read_pfm_grey(path.parent_path() / rho.get<std::string>());
            m.rho_map.assign(row.pixels.begin(), row.pixels.end());
            m.rho = j.value("rho_mean", 0.0);
        } else {
            m.rho = rho.get<double>();
        }
        if (j.contains("tangent") && !j["tangent"].is_null()) {
            auto vec = [](const nlohmann::json& a) {
                return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
            };
            const Vec3 tv = vec(j["tangent"]);
            const Vec3 n = j.contains("normal") ? vec(j["normal"]) : Vec3(tv.unitOrthogonal());
            m.frame = TangentFrame::from_tangent(n, tv);
        }
        if (m.rho < 0) throw Error("negative albedo in " + path.string());
        out.push_back(m);
    }
    return out;
}

}  // namespace slf::brdf
