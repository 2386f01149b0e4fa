#pragma once

#include "slf/core.hpp"

namespace slf {

/// One local-maximum IR observation with the surface geometry needed by the
/// reflectance model. Directions are unit vectors in world space.
struct IrSample {
    double L = 0;      ///< observed IR intensity in [0,1]
    Vec3 point = Vec3::Zero();
    Vec3 n = Vec3::UnitZ();
    Vec3 l = Vec3::UnitZ();  ///< towards the projector
    Vec3 v = Vec3::UnitZ();  ///< towards the camera
    Vec3 h = Vec3::UnitZ();
    double d = 1;      ///< distance to the projector, meters
    int frame = 0;
    int segment = 0;
    int point_id = -1;  ///< nearest mesh vertex, groups per-point albedo

    double n_dot_l() const { return n.dot(l); }
    double n_dot_v() const { return n.dot(v); }
};

}  // namespace slf
