#pragma once

// File formats: PFM (linear float), PNG previews, Radiance HDR environments,
// OBJ / binary PLY meshes with per-face atlas coordinates.

#include "slf/envmap.hpp"
#include "slf/geometry.hpp"

#include <filesystem>

namespace slf::io {

void write_pfm(const std::filesystem::path& path, const ImageF& img);
void write_pfm(const std::filesystem::path& path, const ImageRgb& img);
/// Reads a one- or three-channel PFM. Grey files are replicated into RGB.
ImageRgb read_pfm_rgb(const std::filesystem::path& path);
ImageF read_pfm_grey(const std::filesystem::path& path);

/// 8-bit PNG after clamping to [0,1] and applying display gamma.
void write_png(const std::filesystem::path& path, const ImageRgb& img, double gamma = 2.2);
void write_png(const std::filesystem::path& path, const ImageF& img, double gamma = 2.2);

/// Radiance RGBE (.hdr), uncompressed or new-style RLE.
ImageRgb read_hdr(const std::filesystem::path& path);
void write_hdr(const std::filesystem::path& path, const ImageRgb& img);

/// Loads an equirectangular map from .pfm or .hdr.
EnvironmentMap read_environment(const std::filesystem::path& path);

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_obj(const std::filesystem::path& path);
/// Binary little-endian PLY: x y z nx ny nz per vertex, vertex_indices and
/// a 6-float texcoord list per face.
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh);
TriangleMesh read_ply(const std::filesystem::path& path);
/// Dispatches on the file extension.
TriangleMesh read_mesh(const std::filesystem::path& path);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace slf::io
