#pragma once

#include "slf/core.hpp"

namespace slf {

/// One texel of an equirectangular map with its exact angular bounds.
struct EnvTexel {
    Vec3 dir;  ///< world-space center direction
    Rgb radiance;
    double solid_angle;
    double theta0, theta1, phi0, phi1;  ///< bounds in map space
};

/// Equirectangular HDR environment. Map space has +z up; theta is measured
/// from +z and phi from +x towards +y. `rotation` maps map-space directions
/// into the world.
class EnvironmentMap {
public:
    EnvironmentMap() = default;
    EnvironmentMap(int width, int height, std::vector<Rgb> radiance);

    static EnvironmentMap uniform(const Rgb& radiance, int width = 64);

    int width() const { return width_; }
    int height() const { return height_; }
    const Rgb& texel(int x, int y) const { return radiance_[size_t(y) * size_t(width_) + size_t(x)]; }
    Rgb& texel(int x, int y) { return radiance_[size_t(y) * size_t(width_) + size_t(x)]; }
    const std::vector<Rgb>& radiance() const { return radiance_; }

    double solid_angle(int row) const;
    Vec3 direction(int x, int y) const;  ///< world space
    /// Radiance of the texel containing a world direction.
    Rgb lookup(const Vec3& world_dir) const;

    /// Solid-angle weighted box filter; `width` must divide the current width.
    EnvironmentMap downsampled(int width) const;
    EnvironmentMap scaled(float k) const;

    const Mat3& rotation() const { return rotation_; }
    void set_rotation(const Mat3& world_from_map) { rotation_ = world_from_map; }

    std::vector<EnvTexel> texels() const;

    static Vec3 map_direction(double theta, double phi) {
        return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    }

private:
    int width_ = 0, height_ = 0;
    std::vector<Rgb> radiance_;
    Mat3 rotation_ = Mat3::Identity();
};

/// A rectangular emitter in map space used by procedural environments.
struct EnvLight {
    double theta_deg = 40;
    double phi_deg = 0;
    double size_deg = 20;
    Rgb radiance = Rgb::Constant(5.0f);
};

struct ProceduralEnvironment {
    Rgb zenith{0.55f, 0.6f, 0.7f};
    Rgb horizon{0.8f, 0.8f, 0.75f};
    Rgb ground{0.3f, 0.27f, 0.25f};
    std::vector<EnvLight> lights;
    int width = 256;
};

EnvironmentMap make_environment(const ProceduralEnvironment& spec);

}  // namespace slf
