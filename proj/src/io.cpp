#include "slf/io.hpp"

#include <png.h>

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace slf::io {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return in;
}

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("unexpected end of file");
    return v;
}

std::string next_token(std::istream& in) {
    std::string tok;
    in >> tok;
    return tok;
}

}  // namespace

// --- PFM --------------------------------------------------------------------

void write_pfm(const fs::path& path, const ImageF& img) {
    auto out = open_out(path);
    out << "Pf\n" << img.width << " " << img.height << "\n-1.0\n";
    for (int y = img.height - 1; y >= 0; --y)
        for (int x = 0; x < img.width; ++x) put<float>(out, img(x, y));
}

void write_pfm(const fs::path& path, const ImageRgb& img) {
    auto out = open_out(path);
    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
    for (int y = img.height - 1; y >= 0; --y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) put<float>(out, img(x, y)[c]);
}

namespace {
ImageRgb read_pfm(const fs::path& path, bool& grey) {
    auto in = open_in(path);
    const std::string magic = next_token(in);
    if (magic != "PF" && magic != "Pf") throw Error(path.string() + " is not a PFM file");
    grey = magic == "Pf";
    int w = 0, h = 0;
    double scale = 0;
    in >> w >> h >> scale;
    in.get();
    if (w <= 0 || h <= 0) throw Error("bad PFM size in " + path.string());
    const bool little = scale < 0;
    ImageRgb img(w, h);
    auto read_float = [&] {
        std::uint32_t bits = get<std::uint32_t>(in);
        if (!little) bits = __builtin_bswap32(bits);
        float f;
        std::memcpy(&f, &bits, 4);
        return f;
    };
    for (int y = h - 1; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            if (grey) {
                img(x, y) = Rgb::Constant(read_float());
            } else {
                for (int c = 0; c < 3; ++c) img(x, y)[c] = read_float();
            }
        }
    }
    return img;
}
}  // namespace

ImageRgb read_pfm_rgb(const fs::path& path) {
    bool grey = false;
    return read_pfm(path, grey);
}

ImageF read_pfm_grey(const fs::path& path) {
    bool grey = false;
    const ImageRgb rgb = read_pfm(path, grey);
    ImageF out(rgb.width, rgb.height);
    for (size_t i = 0; i < rgb.size(); ++i) out.pixels[i] = grey ? rgb.pixels[i].x() : greyscale(rgb.pixels[i]);
    return out;
}

// --- PNG --------------------------------------------------------------------

void write_png(const fs::path& path, const ImageRgb& img, double gamma) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw Error("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng failed writing " + path.string());
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(size_t(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const double v = std::pow(std::clamp(double(img(x, y)[c]), 0.0, 1.0), 1.0 / gamma);
                row[size_t(x) * 3 + size_t(c)] = png_byte(std::lround(v * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

void write_png(const fs::path& path, const ImageF& img, double gamma) {
    ImageRgb rgb(img.width, img.height);
    for (size_t i = 0; i < img.size(); ++i) rgb.pixels[i] = Rgb::Constant(img.pixels[i]);
    write_png(path, rgb, gamma);
}

// --- Radiance HDR -----------------------------------------------------------

namespace {
Rgb rgbe_to_float(const unsigned char* e) {
    if (e[3] == 0) return Rgb::Zero();
    const float f = std::ldexp(1.0f, int(e[3]) - (128 + 8));
    return {(e[0] + 0.5f) * f, (e[1] + 0.5f) * f, (e[2] + 0.5f) * f};
}
}  // namespace

ImageRgb read_hdr(const fs::path& path) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("#?", 0) != 0) throw Error(path.string() + " is not a Radiance HDR file");
    while (std::getline(in, line) && !line.empty()) {
        if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe")
            throw Error("unsupported HDR format " + line);
    }
    std::getline(in, line);
    std::istringstream res(line);
    std::string ay, ax;
    int h = 0, w = 0;
    res >> ay >> h >> ax >> w;
    if (ay != "-Y" || ax != "+X" || w <= 0 || h <= 0) throw Error("unsupported HDR orientation: " + line);
    ImageRgb img(w, h);
    std::vector<unsigned char> scan(size_t(w) * 4);
    for (int y = 0; y < h; ++y) {
        unsigned char head[4];
        in.read(reinterpret_cast<char*>(head), 4);
        if (!in) throw Error("truncated HDR file");
        const bool rle = w >= 8 && w < 32768 && head[0] == 2 && head[1] == 2 && ((head[2] << 8) | head[3]) == w;
        if (rle) {
            for (int c = 0; c < 4; ++c) {
                int x = 0;
                while (x < w) {
                    int count = in.get();
                    if (count > 128) {
                        count -= 128;
                        const int v = in.get();
                        for (int k = 0; k < count && x < w; ++k) scan[size_t(x++) * 4 + size_t(c)] = (unsigned char)v;
                    } else {
                        for (int k = 0; k < count && x < w; ++k) scan[size_t(x++) * 4 + size_t(c)] = (unsigned char)in.get();
                    }
                    if (!in) throw Error("truncated HDR scanline");
                }
            }
        } else {
            std::memcpy(scan.data(), head, 4);
            in.read(reinterpret_cast<char*>(scan.data() + 4), std::streamsize(size_t(w) * 4 - 4));
            if (!in) throw Error("truncated HDR file");
        }
        for (int x = 0; x < w; ++x) img(x, y) = rgbe_to_float(&scan[size_t(x) * 4]);
    }
    return img;
}

void write_hdr(const fs::path& path, const ImageRgb& img) {
    auto out = open_out(path);
    out << "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y " << img.height << " +X " << img.width << "\n";
    for (const auto& c : img.pixels) {
        const float m = c.maxCoeff();
        unsigned char e[4] = {0, 0, 0, 0};
        if (m > 1e-32f) {
            int ex;
            const float scale = std::frexp(m, &ex) * 256.0f / m;
            for (int k = 0; k < 3; ++k) e[k] = (unsigned char)std::clamp(int(c[k] * scale), 0, 255);
            e[3] = (unsigned char)(ex + 128);
        }
        out.write(reinterpret_cast<const char*>(e), 4);
    }
}

EnvironmentMap read_environment(const fs::path& path) {
    const std::string ext = path.extension().string();
    const ImageRgb img = (ext == ".hdr" || ext == ".pic") ? read_hdr(path) : read_pfm_rgb(path);
    return {img.width, img.height, img.pixels};
}

// --- OBJ --------------------------------------------------------------------

void write_obj(const fs::path& path, const TriangleMesh& mesh) {
    auto out = open_out(path);
    out.precision(9);
    out << "# vertices " << mesh.vertices.size() << " faces " << mesh.faces.size() << "\n";
    for (const auto& v : mesh.vertices) out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
    for (const auto& n : mesh.normals) out << "vn " << n.x() << " " << n.y() << " " << n.z() << "\n";
    const bool uv = mesh.uv_charts.size() == mesh.faces.size();
    if (uv)
        for (const auto& c : mesh.uv_charts)
            for (const auto& t : c) out << "vt " << t.x() << " " << t.y() << "\n";
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        out << "f";
        for (int k = 0; k < 3; ++k) {
            const int v = mesh.faces[f][size_t(k)] + 1;
            out << " " << v << "/";
            if (uv) out << (f * 3 + size_t(k) + 1);
            if (!mesh.normals.empty()) out << "/" << v;
        }
        out << "\n";
    }
}

TriangleMesh read_obj(const fs::path& path) {
    auto in = open_in(path);
    TriangleMesh mesh;
    std::vector<Vec3> vn;
    std::vector<Vec2> vt;
    std::vector<Vec3> vertex_normals;
    std::vector<int> normal_set;
    bool all_uv = true;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 p;
            ls >> p.x() >> p.y() >> p.z();
            mesh.vertices.push_back(p);
        } else if (tag == "vn") {
            Vec3 n;
            ls >> n.x() >> n.y() >> n.z();
            vn.push_back(n.normalized());
        } else if (tag == "vt") {
            Vec2 t;
            ls >> t.x() >> t.y();
            vt.push_back(t);
        } else if (tag == "f") {
            struct Corner {
                int v, t, n;
            };
            std::vector<Corner> corners;
            std::string tok;
            while (ls >> tok) {
                Corner c{-1, -1, -1};
                int* slot[3] = {&c.v, &c.t, &c.n};
                size_t start = 0;
                for (int k = 0; k < 3; ++k) {
                    const size_t slash = tok.find('/', start);
                    const std::string part = tok.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
                    if (!part.empty()) {
                        int idx = std::stoi(part);
                        const int count = k == 0 ? int(mesh.vertices.size()) : k == 1 ? int(vt.size()) : int(vn.size());
                        *slot[k] = idx > 0 ? idx - 1 : count + idx;
                    }
                    if (slash == std::string::npos) break;
                    start = slash + 1;
                }
                corners.push_back(c);
            }
            for (size_t k = 1; k + 1 < corners.size(); ++k) {
                const Corner tri[3] = {corners[0], corners[k], corners[k + 1]};
                mesh.faces.push_back({tri[0].v, tri[1].v, tri[2].v});
                std::array<Vec2, 3> uv;
                for (int j = 0; j < 3; ++j) {
                    if (tri[j].t >= 0 && tri[j].t < int(vt.size()))
                        uv[size_t(j)] = vt[size_t(tri[j].t)];
                    else
                        all_uv = false;
                    if (tri[j].n >= 0 && tri[j].n < int(vn.size())) {
                        if (vertex_normals.size() < mesh.vertices.size()) {
                            vertex_normals.resize(mesh.vertices.size(), Vec3::Zero());
                            normal_set.resize(mesh.vertices.size(), 0);
                        }
                        vertex_normals[size_t(tri[j].v)] = vn[size_t(tri[j].n)];
                        normal_set[size_t(tri[j].v)] = 1;
                    }
                }
                mesh.uv_charts.push_back(uv);
            }
        }
    }
    if (!all_uv) mesh.uv_charts.clear();
    const bool have_normals = !normal_set.empty() && std::all_of(normal_set.begin(), normal_set.end(), [](int s) { return s; });
    if (have_normals && vertex_normals.size() == mesh.vertices.size())
        mesh.normals = vertex_normals;
    else
        mesh.compute_normals();
    mesh.validate();
    return mesh;
}

// --- PLY --------------------------------------------------------------------

void write_ply(const fs::path& path, const TriangleMesh& mesh) {
    auto out = open_out(path);
    const bool uv = mesh.uv_charts.size() == mesh.faces.size();
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << mesh.vertices.size() << "\n";
    out << "property float x\nproperty float y\nproperty float z\n";
    out << "property float nx\nproperty float ny\nproperty float nz\n";
    out << "element face " << mesh.faces.size() << "\n";
    out << "property list uchar int vertex_indices\n";
    if (uv) out << "property list uchar float texcoord\n";
    out << "end_header\n";
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
        for (int k = 0; k < 3; ++k) put<float>(out, float(mesh.vertices[i][k]));
        const Vec3 n = i < mesh.normals.size() ? mesh.normals[i] : Vec3::UnitZ();
        for (int k = 0; k < 3; ++k) put<float>(out, float(n[k]));
    }
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        put<std::uint8_t>(out, 3);
        for (int v : mesh.faces[f]) put<std::int32_t>(out, v);
        if (uv) {
            put<std::uint8_t>(out, 6);
            for (const auto& t : mesh.uv_charts[f]) {
                put<float>(out, float(t.x()));
                put<float>(out, float(t.y()));
            }
        }
    }
}

namespace {
double read_scalar(std::istream& in, const std::string& type) {
    if (type == "float" || type == "float32") return get<float>(in);
    if (type == "double" || type == "float64") return get<double>(in);
    if (type == "uchar" || type == "uint8") return get<std::uint8_t>(in);
    if (type == "char" || type == "int8") return get<std::int8_t>(in);
    if (type == "short" || type == "int16") return get<std::int16_t>(in);
    if (type == "ushort" || type == "uint16") return get<std::uint16_t>(in);
    if (type == "int" || type == "int32") return get<std::int32_t>(in);
    if (type == "uint" || type == "uint32") return get<std::uint32_t>(in);
    throw Error("unsupported PLY type " + type);
}
}  // namespace

TriangleMesh read_ply(const fs::path& path) {
    auto in = open_in(path);
    struct Property {
        std::string name, type, count_type;
        bool list = false;
    };
    struct Element {
        std::string name;
        size_t count = 0;
        std::vector<Property> props;
    };
    std::vector<Element> elements;
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) throw Error(path.string() + " is not a PLY file");
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "binary_little_endian") throw Error("only binary little-endian PLY is supported");
        } else if (tag == "element") {
            Element e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) throw Error("PLY property before element");
            Property p;
            std::string t;
            ls >> t;
            if (t == "list") {
                p.list = true;
                ls >> p.count_type >> p.type >> p.name;
            } else {
                p.type = t;
                ls >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        }
    }
    TriangleMesh mesh;
    bool has_normals = false, has_uv = false;
    for (const auto& e : elements) {
        for (size_t i = 0; i < e.count; ++i) {
            if (e.name == "vertex") {
                Vec3 p = Vec3::Zero(), n = Vec3::Zero();
                for (const auto& prop : e.props) {
                    if (prop.list) throw Error("unexpected list in PLY vertex");
                    const double v = read_scalar(in, prop.type);
                    if (prop.name == "x") p.x() = v;
                    else if (prop.name == "y") p.y() = v;
                    else if (prop.name == "z") p.z() = v;
                    else if (prop.name == "nx") n.x() = v, has_normals = true;
                    else if (prop.name == "ny") n.y() = v;
                    else if (prop.name == "nz") n.z() = v;
                }
                mesh.vertices.push_back(p);
                mesh.normals.push_back(n.norm() > 0 ? Vec3(n.normalized()) : Vec3::UnitZ());
            } else if (e.name == "face") {
                std::vector<int> idx;
                std::vector<double> tc;
                for (const auto& prop : e.props) {
                    if (!prop.list) {
                        read_scalar(in, prop.type);
                        continue;
                    }
                    const auto count = size_t(read_scalar(in, prop.count_type));
                    std::vector<double> vals(count);
                    for (auto& v : vals) v = read_scalar(in, prop.type);
                    if (prop.name == "vertex_indices" || prop.name == "vertex_index")
                        for (double v : vals) idx.push_back(int(v));
                    else if (prop.name == "texcoord")
                        tc = vals;
                }
                for (size_t k = 1; k + 1 < idx.size(); ++k) mesh.faces.push_back({idx[0], idx[k], idx[k + 1]});
                if (idx.size() == 3 && tc.size() == 6) {
                    mesh.uv_charts.push_back({Vec2(tc[0], tc[1]), Vec2(tc[2], tc[3]), Vec2(tc[4], tc[5])});
                    has_uv = true;
                }
            } else {
                for (const auto& prop : e.props) {
                    if (prop.list) {
                        const auto count = size_t(read_scalar(in, prop.count_type));
                        for (size_t k = 0; k < count; ++k) read_scalar(in, prop.type);
                    } else {
                        read_scalar(in, prop.type);
                    }
                }
            }
        }
    }
    if (!has_uv || mesh.uv_charts.size() != mesh.faces.size()) mesh.uv_charts.clear();
    if (!has_normals) mesh.compute_normals();
    mesh.validate();
    return mesh;
}

TriangleMesh read_mesh(const fs::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".ply") return read_ply(path);
    if (ext == ".obj") return read_obj(path);
    throw Error("unknown mesh format " + ext);
}

void write_mesh(const fs::path& path, const TriangleMesh& mesh) {
    const std::string ext = path.extension().string();
    if (ext == ".ply") return write_ply(path, mesh);
    if (ext == ".obj") return write_obj(path, mesh);
    throw Error("unknown mesh format " + ext);
}

}  // namespace slf::io
