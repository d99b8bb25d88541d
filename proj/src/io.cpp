// Copyright Contributors to the steepgs project
// SPDX-License-Identifier: Apache-2.0

#include "steepgs/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace steepgs {

using nlohmann::json;

std::string
format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void
atomic_write(const std::filesystem::path &path, const std::string &contents) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out.flush())
            throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string
read_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FileNotFound("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace {

json
parse_json(const std::string &text, const char *what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

template <int N>
Eigen::Matrix<double, N, 1>
vec_from(const json &j, const char *key) {
    if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != N)
        throw ConfigError(std::string("expected '") + key + "' as an array of " + std::to_string(N) + " numbers");
    Eigen::Matrix<double, N, 1> v;
    for (int k = 0; k < N; ++k)
        v[k] = j.at(key)[k].get<double>();
    return v;
}

template <typename Derived>
json
vec_to(const Eigen::MatrixBase<Derived> &v) {
    json a = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k)
        a.push_back(v[k]);
    return a;
}

SceneMode
mode_from(const std::string &name) {
    if (name == "planar")
        return SceneMode::Planar;
    if (name == "affine3d")
        return SceneMode::Affine3D;
    throw ConfigError("unknown scene mode '" + name + "' (expected planar or affine3d)");
}

const char *
mode_name(SceneMode mode) {
    return mode == SceneMode::Planar ? "planar" : "affine3d";
}

} // namespace

std::string
scene_to_json(const Scene &scene) {
    json prims = json::array();
    for (const Gaussian &g : scene.primitives) {
        prims.push_back(json{{"id", g.id},
                             {"p", vec_to(g.position)},
                             {"s", vec_to(g.scale)},
                             {"q", vec_to(g.rotation)},
                             {"o", g.opacity},
                             {"c", vec_to(g.color)},
                             {"depth", g.depth}});
    }
    json doc{{"mode", mode_name(scene.mode)}, {"primitives", prims}};
    return doc.dump(1) + "\n";
}

Scene
scene_from_json(const std::string &text) {
    const json doc = parse_json(text, "scene");
    Scene scene;
    try {
        scene.mode = mode_from(doc.at("mode").get<std::string>());
        for (const json &p : doc.at("primitives")) {
            Gaussian g;
            g.id = p.at("id").get<std::int64_t>();
            g.position = vec_from<3>(p, "p");
            g.scale = vec_from<3>(p, "s");
            g.rotation = vec_from<4>(p, "q");
            g.opacity = p.at("o").get<double>();
            g.color = vec_from<3>(p, "c");
            g.depth = p.value("depth", 0.0);
            scene.primitives.push_back(g);
        }
    } catch (const json::exception &e) {
        throw ConfigError(std::string("scene: ") + e.what());
    }
    try {
        scene.validate();
    } catch (const InvalidArgument &e) {
        throw ConfigError(std::string("scene: ") + e.what());
    }
    return scene;
}

Scene
load_scene(const std::filesystem::path &path) {
    return scene_from_json(read_file(path));
}

std::string
camera_to_json(const Camera &cam) {
    json doc{{"P", json::array({vec_to(Vec3(cam.P.row(0).transpose())), vec_to(Vec3(cam.P.row(1).transpose()))})},
             {"b", vec_to(cam.b)},
             {"width", cam.width},
             {"height", cam.height},
             {"pixel_scale", cam.pixelScale}};
    return doc.dump(1) + "\n";
}

namespace {

Camera
camera_from(const json &doc) {
    Camera cam;
    try {
        if (doc.contains("P")) {
            const json &P = doc.at("P");
            if (!P.is_array() || P.size() != 2 || P[0].size() != 3 || P[1].size() != 3)
                throw ConfigError("camera: P must be a 2x3 array");
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 3; ++c)
                    cam.P(r, c) = P[r][c].get<double>();
        }
        if (doc.contains("b"))
            cam.b = vec_from<2>(doc, "b");
        cam.width = doc.at("width").get<int>();
        cam.height = doc.at("height").get<int>();
        cam.pixelScale = doc.value("pixel_scale", 1.0);
    } catch (const json::exception &e) {
        throw ConfigError(std::string("camera: ") + e.what());
    }
    try {
        cam.validate();
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
    return cam;
}

} // namespace

Camera
camera_from_json(const std::string &text) {
    return camera_from(parse_json(text, "camera"));
}

Camera
load_camera(const std::filesystem::path &path) {
    return camera_from_json(read_file(path));
}

std::string
encode_ppm(const Image &image) {
    std::string out = "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
    out.reserve(out.size() + image.pixels.size());
    for (Eigen::Index i = 0; i < image.pixels.rows(); ++i)
        for (int c = 0; c < 3; ++c) {
            const double v = std::clamp(image.pixels(i, c), 0.0, 1.0);
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
        }
    return out;
}

Image
decode_ppm(const std::string &bytes) {
    std::size_t pos = 0;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&] {
        skip_space();
        long v = 0;
        std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])) && pos - start < 9)
            v = v * 10 + (bytes[pos++] - '0');
        if (pos == start)
            throw ConfigError("ppm: malformed header");
        return static_cast<int>(v);
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        throw ConfigError("ppm: only binary P6 images are supported");
    pos = 2;
    const int w = read_int(), h = read_int(), maxval = read_int();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw ConfigError("ppm: unsupported size or maxval");
    ++pos; // single whitespace before the raster
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() < pos + need)
        throw ConfigError("ppm: truncated raster");
    Image img(w, h);
    for (std::size_t i = 0; i < need; ++i)
        img.pixels.data()[i] = static_cast<unsigned char>(bytes[pos + i]) / static_cast<double>(maxval);
    return img;
}

Image
load_ppm(const std::filesystem::path &path) {
    return decode_ppm(read_file(path));
}

std::string
metrics_csv(std::span<const TrainRow> rows) {
    std::string out = "step,loss,psnr,n_points,policy_event\n";
    for (const TrainRow &r : rows)
        out += std::to_string(r.step) + "," + format_float(r.loss) + "," + format_float(r.psnr) + "," +
               std::to_string(r.points) + "," + r.event + "\n";
    return out;
}

std::string
loss_curve_svg(std::span<const CurveSeries> series, const std::string &title) {
    static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
    const double W = 640, H = 400, left = 70, right = 20, top = 40, bottom = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const CurveSeries &s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]))
                continue;
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) {
        x0 = std::isfinite(x0) ? x0 - 1 : 0;
        x1 = x0 + 2;
    }
    if (!(y1 > y0)) {
        y0 = std::isfinite(y0) ? y0 - 1 : 0;
        y1 = y0 + 2;
    }
    auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * (W - left - right); };
    auto sy = [&](double y) { return H - bottom - (y - y0) / (y1 - y0) * (H - top - bottom); };
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
       << W << " " << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">"
       << title << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        os << "<text x=\"" << sx(xv) << "\" y=\"" << H - bottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << num(xv) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << sy(yv) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << num(yv) << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">step</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const CurveSeries &s = series[k];
        const char *color = palette[k % 4];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            if (std::isfinite(s.y[i]))
                os << num(sx(s.x[i])) << "," << num(sy(s.y[i])) << " ";
        os << "\"/>\n";
        const double ly = top + 16 * static_cast<double>(k);
        os << "<line x1=\"" << W - right - 120 << "\" y1=\"" << ly << "\" x2=\"" << W - right - 100 << "\" y2=\""
           << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - right - 95 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace steepgs
