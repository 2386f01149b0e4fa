#include "slf/envmap.hpp"

namespace slf {

EnvironmentMap::EnvironmentMap(int width, int height, std::vector<Rgb> radiance)
    : width_(width), height_(height), radiance_(std::move(radiance)) {
    if (width <= 0 || height <= 0 || width != 2 * height)
        throw std::invalid_argument("equirectangular map must have width == 2 * height");
    if (radiance_.size() != size_t(width) * size_t(height)) throw std::invalid_argument("radiance size mismatch");
    for (const auto& r : radiance_)
        if (!(r.minCoeff() >= 0.0f) || !r.allFinite()) throw std::invalid_argument("radiance must be non-negative");
}

EnvironmentMap EnvironmentMap::uniform(const Rgb& radiance, int width) {
    return {width, width / 2, std::vector<Rgb>(size_t(width) * size_t(width / 2), radiance)};
}

double EnvironmentMap::solid_angle(int row) const {
    const double t0 = kPi * row / height_, t1 = kPi * (row + 1) / height_;
    return 2.0 * kPi / width_ * (std::cos(t0) - std::cos(t1));
}

Vec3 EnvironmentMap::direction(int x, int y) const {
    return rotation_ * map_direction(kPi * (y + 0.5) / height_, 2.0 * kPi * (x + 0.5) / width_);
}

Rgb EnvironmentMap::lookup(const Vec3& world_dir) const {
    const Vec3 d = (rotation_.transpose() * world_dir).normalized();
    const double theta = std::acos(std::clamp(d.z(), -1.0, 1.0));
    double phi = std::atan2(d.y(), d.x());
    if (phi < 0) phi += 2.0 * kPi;
    const int x = std::clamp(int(phi / (2.0 * kPi) * width_), 0, width_ - 1);
    const int y = std::clamp(int(theta / kPi * height_), 0, height_ - 1);
    return texel(x, y);
}

EnvironmentMap EnvironmentMap::downsampled(int width) const {
    if (width == width_) return *this;
    if (width <= 0 || width_ % width != 0) throw std::invalid_argument("downsample width must divide the map width");
    const int f = width_ / width, height = width / 2;
    std::vector<Rgb> out(size_t(width) * size_t(height), Rgb::Zero());
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            Rgb sum = Rgb::Zero();
            double w = 0;
            for (int yy = y * f; yy < (y + 1) * f; ++yy) {
                const double sa = solid_angle(yy);
                for (int xx = x * f; xx < (x + 1) * f; ++xx) {
                    sum += texel(xx, yy) * float(sa);
                    w += sa;
                }
            }
            out[size_t(y) * size_t(width) + size_t(x)] = sum / float(w);
        }
    }
    EnvironmentMap env(width, height, std::move(out));
    env.rotation_ = rotation_;
    return env;
}

EnvironmentMap EnvironmentMap::scaled(float k) const {
    EnvironmentMap env = *this;
    for (auto& r : env.radiance_) r *= k;
    return env;
}

std::vector<EnvTexel> EnvironmentMap::texels() const {
    std::vector<EnvTexel> out;
    out.reserve(radiance_.size());
    for (int y = 0; y < height_; ++y) {
        const double sa = solid_angle(y);
        for (int x = 0; x < width_; ++x) {
            EnvTexel t;
            t.dir = direction(x, y);
            t.radiance = texel(x, y);
            t.solid_angle = sa;
            t.theta0 = kPi * y / height_;
            t.theta1 = kPi * (y + 1) / height_;
            t.phi0 = 2.0 * kPi * x / width_;
            t.phi1 = 2.0 * kPi * (x + 1) / width_;
            out.push_back(t);
        }
    }
    return out;
}

EnvironmentMap make_environment(const ProceduralEnvironment& spec) {
    const int w = spec.width, h = w / 2;
    std::vector<Rgb> rad(size_t(w) * size_t(h));
    for (int y = 0; y < h; ++y) {
        const double theta = kPi * (y + 0.5) / h;
        for (int x = 0; x < w; ++x) {
            const double phi = 2.0 * kPi * (x + 0.5) / w;
            Rgb c;
            if (theta < kPi / 2) {
                const auto s = float(std::cos(theta));
                c = spec.horizon * (1.0f - s) + spec.zenith * s;
            } else {
                c = spec.ground;
            }
            for (const auto& light : spec.lights) {
                const double lt = light.theta_deg * kPi / 180, lp = light.phi_deg * kPi / 180;
                const double half = light.size_deg * kPi / 360;
                double dphi = std::remainder(phi - lp, 2.0 * kPi);
                if (std::abs(theta - lt) <= half && std::abs(dphi) * std::max(std::sin(lt), 0.05) <= half)
                    c = light.radiance;
            }
            rad[size_t(y) * size_t(w) + size_t(x)] = c;
        }
    }
    return {w, h, std::move(rad)};
}

}  // namespace slf
