#include "slf/texfuse.hpp"

#include "slf/io.hpp"

#include <cstring>
#include <fstream>

namespace slf::texfuse {

size_t TextureAtlas::observed_count() const {
    size_t n = 0;
    for (float w : weight.pixels) n += w > 0;
    return n;
}

void TextureAtlas::save(const std::filesystem::path& stem) const {
    const std::string s = stem.string();
    io::write_pfm(s + ".pfm", color);
    io::write_pfm(s + "_weight.pfm", weight);
    io::write_png(s + ".png", color);
}

TextureAtlas TextureAtlas::load(const std::filesystem::path& stem) {
    const std::string s = stem.string();
    TextureAtlas a;
    a.color = io::read_pfm_rgb(s + ".pfm");
    a.weight = io::read_pfm_grey(s + "_weight.pfm");
    if (!a.weight.same_size(a.color)) throw Error("atlas weight and color differ in size: " + s);
    return a;
}

void FusionParams::validate() const {
    if (!(sigma_m > 0) || !(delta_z > 0) || depth_test < 0) throw std::invalid_argument("invalid fusion parameters");
}

double motion_factor(const Pose& prev, const Pose& cur, double sigma_m) {
    const Vec3 dt = cur.t - prev.t;
    const Vec3 dr = rotation_log(prev.R.transpose() * cur.R);
    return std::exp(-(dt.squaredNorm() + dr.squaredNorm()) / (sigma_m * sigma_m));
}

FusionWeights compute_weights(const ImageF& depth, const PinholeCamera& camera, const Pose& pose_prev,
                              const Pose& pose_cur, const FusionParams& params, const Image<Vec3f>* normals_camera) {
    params.validate();
    if (!depth.same_size(camera.width, camera.height)) throw std::invalid_argument("depth does not match the camera");
    FusionWeights w;
    w.m = motion_factor(pose_prev, pose_cur, params.sigma_m);
    w.z = Mask(depth.width, depth.height, 0);
    w.s = ImageF(depth.width, depth.height, 0.0f);
    const Image<Vec3f> from_depth =
        normals_camera ? Image<Vec3f>() : normals_from_depth(depth, camera);
    const Image<Vec3f>& normals = normals_camera ? *normals_camera : from_depth;
    for (int y = 0; y < depth.height; ++y)
        for (int x = 0; x < depth.width; ++x) {
            const float Z = depth(x, y);
            if (Z <= 0) continue;
            bool edge = false;
            for (int dy = -1; dy <= 1 && !edge; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int u = x + dx, v = y + dy;
                    if (!depth.contains(u, v) || depth(u, v) <= 0 || std::abs(depth(u, v) - Z) > params.delta_z) {
                        edge = true;
                        break;
                    }
                }
            w.z(x, y) = edge ? 0 : 1;
            const Vec3 n = normals(x, y).cast<double>();
            if (n.squaredNorm() == 0) continue;
            const Vec3 v = -backproject(camera, Vec2(x, y), Z).normalized();
            w.s(x, y) = float(std::max(0.0, n.dot(v)) / (double(Z) * Z));
        }
    return w;
}

void fuse_frame(TextureAtlas& atlas, const ImageRgb& rgb, const FusionWeights& weights, const PinholeCamera& camera,
                const Pose& pose, const TriangleMesh& mesh, const std::vector<TexelSample>& texels, int frame_id,
                const FusionParams& params, std::vector<Observation>* observations) {
    params.validate();
    if (!rgb.same_size(camera.width, camera.height) || !weights.z.same_size(rgb) || !weights.s.same_size(rgb))
        throw std::invalid_argument("frame and weights do not match the camera");
    if (weights.m <= 0) return;
    const SurfaceMap surf = rasterize(mesh, camera, pose);
    const Pose world_to_cam = pose.inverse();
    const double eps = params.visibility_epsilon();
    constexpr int kChunk = 8192;
    const int n = int(texels.size());
    const int chunks = (n + kChunk - 1) / kChunk;
    std::vector<std::vector<Observation>> per_chunk(static_cast<size_t>(observations ? chunks : 0));
    parallel_for(n, kChunk, [&](int b, int e) {
        std::vector<Observation>* out = observations ? &per_chunk[size_t(b / kChunk)] : nullptr;
        for (int i = b; i < e; ++i) {
            const TexelSample& t = texels[size_t(i)];
            const Vec3 pc = world_to_cam * t.point;
            if (t.normal.dot(pose.t - t.point) <= 0) continue;
            const auto px = project(camera, pc);
            if (!px) continue;
            const int xi = int(std::lround(px->x())), yi = int(std::lround(px->y()));
            if (!surf.depth.contains(xi, yi)) continue;
            const float zr = surf.depth(xi, yi);
            if (zr <= 0 || std::abs(zr - pc.z()) > eps) continue;
            // tiny double weights can underflow in float
            const float w = float(weights.at(xi, yi));
            if (!(w > 0)) continue;
            Rgb c;
            if (!sample_bilinear(rgb, px->x(), px->y(), c)) continue;
            float& W = atlas.weight.pixels[t.texel];
            Rgb& A = atlas.color.pixels[t.texel];
            A = (A * W + c * w) / (W + w);
            W += w;
            if (out) out->push_back({t.texel, std::uint32_t(frame_id), c, w});
        }
    });
    if (observations)
        for (auto& c : per_chunk) observations->insert(observations->end(), c.begin(), c.end());
}

Fuser::Fuser(const TriangleMesh& mesh, int atlas_size, const PinholeCamera& camera, const FusionParams& params)
    : mesh_(&mesh), camera_(camera), params_(params), atlas_(atlas_size), texels_(enumerate_texels(mesh, atlas_size)) {
    params_.validate();
    camera_.validate();
}

void Fuser::add(const ImageRgb& rgb, const ImageF& depth, const Pose& pose, int frame_id,
                std::vector<Observation>* observations) {
    const SurfaceMap surf = rasterize(*mesh_, camera_, pose);
    Image<Vec3f> normals(camera_.width, camera_.height, Vec3f::Zero());
    const Mat3 Rt = pose.R.transpose();
    for (int y = 0; y < camera_.height; ++y)
        for (int x = 0; x < camera_.width; ++x)
            if (surf.valid(x, y)) normals(x, y) = (Rt * surface_normal(*mesh_, surf, x, y)).cast<float>();
    const FusionWeights w = compute_weights(depth, camera_, prev_.value_or(pose), pose, params_, &normals);
    fuse_frame(atlas_, rgb, w, camera_, pose, *mesh_, texels_, frame_id, params_, observations);
    prev_ = pose;
}

// --- sidecar ---------------------------------------------------------------------------

namespace {

static_assert(sizeof(float) == 4);

template <typename T>
void put_le(char*& p, T v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    for (int i = 0; i < 4; ++i) *p++ = char((u >> (8 * i)) & 0xffu);
}

template <typename T>
T get_le(const char*& p) {
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= std::uint32_t(std::uint8_t(*p++)) << (8 * i);
    T v;
    std::memcpy(&v, &u, 4);
    return v;
}

constexpr size_t kRecord = 24;

}  // namespace

void write_observations(const std::filesystem::path& path, const std::vector<Observation>& obs, bool append) {
    std::ofstream f(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!f) throw Error("cannot write " + path.string());
    std::vector<char> buf(obs.size() * kRecord);
    char* p = buf.data();
    for (const auto& o : obs) {
        put_le(p, o.texel);
        put_le(p, o.frame);
        for (int c = 0; c < 3; ++c) put_le(p, o.rgb[c]);
        put_le(p, o.weight);
    }
    f.write(buf.data(), std::streamsize(buf.size()));
    if (!f) throw Error("short write to " + path.string());
}

std::vector<Observation> read_observations(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw Error("cannot read " + path.string());
    const auto bytes = size_t(f.tellg());
    if (bytes % kRecord != 0) throw Error(path.string() + ": truncated observation record");
    f.seekg(0);
    std::vector<char> buf(bytes);
    f.read(buf.data(), std::streamsize(bytes));
    std::vector<Observation> out(bytes / kRecord);
    const char* p = buf.data();
    for (auto& o : out) {
        o.texel = get_le<std::uint32_t>(p);
        o.frame = get_le<std::uint32_t>(p);
        for (int c = 0; c < 3; ++c) o.rgb[c] = get_le<float>(p);
        o.weight = get_le<float>(p);
    }
    return out;
}

// --- prediction ---------------------------------------------------------------------------

bool sample_atlas(const TextureAtlas& atlas, const Vec2& uv, Rgb& out) {
    const int size = atlas.size();
    const double x = uv.x() * size - 0.5, y = uv.y() * size - 0.5;
    const int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    const float ax = float(x - x0), ay = float(y - y0);
    Rgb acc = Rgb::Zero();
    float wsum = 0;
    for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
            const int u = x0 + dx, v = y0 + dy;
            if (!atlas.color.contains(u, v) || atlas.weight(u, v) <= 0) continue;
            const float w = (dx ? ax : 1 - ax) * (dy ? ay : 1 - ay);
            acc += w * atlas.color(u, v);
            wsum += w;
        }
    if (wsum <= 1e-6f) return false;
    out = acc / wsum;
    return true;
}

Prediction render_prediction(const TextureAtlas& atlas, const TriangleMesh& mesh, const PinholeCamera& camera,
                             const Pose& pose) {
    if (mesh.uv_charts.size() != mesh.faces.size()) throw std::invalid_argument("mesh has no atlas parameterization");
    Prediction p;
    p.surface = rasterize(mesh, camera, pose);
    p.depth = p.surface.depth;
    p.normal = normal_image(mesh, p.surface);
    p.color = ImageRgb(camera.width, camera.height, Rgb::Zero());
    p.valid = Mask(camera.width, camera.height, 0);
    if (atlas.size() == 0) return p;
    parallel_for(camera.height, 16, [&](int b, int e) {
        for (int y = b; y < e; ++y)
            for (int x = 0; x < camera.width; ++x) {
                const int f = p.surface.face(x, y);
                if (f < 0) continue;
                const Vec3 bc = p.surface.bary(x, y).cast<double>();
                const auto& ch = mesh.uv_charts[size_t(f)];
                const Vec2 uv = bc[0] * ch[0] + bc[1] * ch[1] + bc[2] * ch[2];
                Rgb c;
                if (sample_atlas(atlas, uv, c)) {
                    p.color(x, y) = c;
                    p.valid(x, y) = 1;
                }
            }
    });
    return p;
}

}  // namespace slf::texfuse
