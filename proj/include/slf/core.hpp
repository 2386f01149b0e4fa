#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <type_traits>
#include <stdexcept>
#include <string>
#include <vector>

namespace slf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;
using Mat3 = Eigen::Matrix3d;
using Rgb = Eigen::Vector3f;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class for errors raised by the toolkit. Precondition violations use
/// std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// ITU-R 601 luma of a linear RGB triple.
inline float greyscale(const Rgb& c) { return 0.299f * c.x() + 0.587f * c.y() + 0.114f * c.z(); }

/// Dense row-major image. Pixel (x, y) has its center at continuous
/// coordinate (x, y).
template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, const T& fill = T{}) : width(w), height(h), pixels(size_t(w) * size_t(h), fill) {}

    bool empty() const { return pixels.empty(); }
    size_t size() const { return pixels.size(); }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

    T& operator()(int x, int y) { return pixels[size_t(y) * size_t(width) + size_t(x)]; }
    const T& operator()(int x, int y) const { return pixels[size_t(y) * size_t(width) + size_t(x)]; }

    bool same_size(int w, int h) const { return width == w && height == h; }
    template <typename U>
    bool same_size(const Image<U>& o) const { return width == o.width && height == o.height; }
};

using ImageF = Image<float>;
using ImageRgb = Image<Rgb>;
using Mask = Image<std::uint8_t>;

namespace detail {
template <typename T>
T zero_value() {
    if constexpr (std::is_arithmetic_v<T>) {
        return T(0);
    } else {
        return T::Zero();
    }
}
}  // namespace detail

/// Bilinear interpolation at continuous (x, y). Returns false when the 2x2
/// footprint leaves the image.
template <typename T>
bool sample_bilinear(const Image<T>& img, double x, double y, T& out) {
    const double fx = std::floor(x), fy = std::floor(y);
    const int x0 = int(fx), y0 = int(fy);
    if (x0 < 0 || y0 < 0 || x0 + 1 >= img.width || y0 + 1 >= img.height) {
        // exact hits on the last row/column are still valid
        if (x0 >= 0 && y0 >= 0 && x0 < img.width && y0 < img.height && x == fx && y == fy) {
            out = img(x0, y0);
            return true;
        }
        return false;
    }
    const auto ax = static_cast<float>(x - fx), ay = static_cast<float>(y - fy);
    out = (img(x0, y0) * (1.0f - ax) + img(x0 + 1, y0) * ax) * (1.0f - ay) +
          (img(x0, y0 + 1) * (1.0f - ax) + img(x0 + 1, y0 + 1) * ax) * ay;
    return true;
}

inline ImageF to_greyscale(const ImageRgb& img) {
    ImageF out(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i) out.pixels[i] = greyscale(img.pixels[i]);
    return out;
}

/// Runs body(begin, end) over [0, n) split into fixed chunks on worker
/// threads. Chunk boundaries do not depend on the thread count.
void parallel_for(int n, int chunk, const std::function<void(int, int)>& body);

/// Number of worker threads used by parallel_for; 0 selects hardware concurrency.
void set_thread_count(int threads);
int thread_count();

}  // namespace slf
