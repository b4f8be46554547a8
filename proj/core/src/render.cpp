#include "hairstep/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

#include <Eigen/Geometry>

#include "json.hpp"

#include "hairstep/io.hpp"

namespace hairstep {

using nlohmann::json;

Vec3 Camera::to_camera(const Vec3& world) const {
    return extrinsics.topLeftCorner<3, 3>() * world + extrinsics.topRightCorner<3, 1>();
}

Vec2 Camera::project(const Vec3& c) const { return {fx * c.x() / c.z() + cx, fy * c.y() / c.z() + cy}; }

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fovYDeg, int width, int height) {
    const Vec3 forward = (target - eye).normalized();
    Vec3 right = forward.cross(up);
    if (right.norm() < 1e-12) throw InvalidInput("look_at: up is parallel to the view direction");
    right.normalize();
    const Vec3 down = forward.cross(right);

    Camera cam;
    Eigen::Matrix3d R;
    R.row(0) = right.transpose();
    R.row(1) = down.transpose();
    R.row(2) = forward.transpose();
    cam.extrinsics.setIdentity();
    cam.extrinsics.topLeftCorner<3, 3>() = R;
    cam.extrinsics.topRightCorner<3, 1>() = -R * eye;
    cam.width = width;
    cam.height = height;
    cam.fy = 0.5 * height / std::tan(0.5 * fovYDeg * std::numbers::pi / 180.0);
    cam.fx = cam.fy;
    cam.cx = (width - 1) / 2.0;
    cam.cy = (height - 1) / 2.0;
    return cam;
}

Camera Camera::orbit(const Vec3& target, double distance, double azimuthDeg, double elevationDeg, double fovYDeg,
                     int width, int height) {
    const double az = azimuthDeg * std::numbers::pi / 180.0;
    const double el = elevationDeg * std::numbers::pi / 180.0;
    const Vec3 offset(distance * std::cos(el) * std::sin(az), distance * std::sin(el), distance * std::cos(el) * std::cos(az));
    return look_at(target + offset, target, Vec3::UnitY(), fovYDeg, width, height);
}

void validate(const Camera& cam) {
    if (!(cam.fx > 0.0) || !(cam.fy > 0.0)) throw InvalidInput("camera: fx and fy must be positive");
    if (cam.width <= 0 || cam.height <= 0) throw InvalidInput("camera: image size must be positive");
    if (!cam.extrinsics.allFinite()) throw InvalidInput("camera: non-finite extrinsics");
    const Eigen::Matrix3d R = cam.extrinsics.topLeftCorner<3, 3>();
    if (((R * R.transpose()) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6)
        throw InvalidInput("camera: extrinsic rotation is not orthonormal");
    if (std::abs(R.determinant() - 1.0) > 1e-6) throw InvalidInput("camera: extrinsic rotation is a reflection");
    const Eigen::RowVector4d last = cam.extrinsics.row(3);
    if ((last - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > 1e-12)
        throw InvalidInput("camera: extrinsics last row must be (0, 0, 0, 1)");
}

Camera read_camera(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
    Camera cam;
    try {
        cam.fx = j.at("fx").get<double>();
        cam.fy = j.at("fy").get<double>();
        cam.cx = j.at("cx").get<double>();
        cam.cy = j.at("cy").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        const auto e = j.at("extrinsics").get<std::vector<double>>();
        if (e.size() != 16) throw ParseError(path.string() + ": extrinsics must have 16 values", 0);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) cam.extrinsics(r, c) = e[static_cast<std::size_t>(r * 4 + c)];
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    validate(cam);
    return cam;
}

void write_camera(const std::filesystem::path& path, const Camera& cam) {
    std::vector<double> e;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) e.push_back(cam.extrinsics(r, c));
    const json j = {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy},
                    {"extrinsics", e}, {"width", cam.width}, {"height", cam.height}};
    io::write_text(path, j.dump(2) + "\n");
}

namespace {

struct ZKey {
    double distance = std::numeric_limits<double>::infinity();
    int strand = -1;
    int segment = -1;

    bool operator<(const ZKey& o) const {
        return std::tie(distance, strand, segment) < std::tie(o.distance, o.strand, o.segment);
    }
};

}  // namespace

RenderOutput render_hair(const HairModel& model, const Camera& cam, const RenderParams& params) {
    validate(cam);
    if (model.strands.empty()) throw InvalidInput("render_hair: empty model");
    if (!(params.lineWidth > 0.0)) throw InvalidInput("render_hair: lineWidth must be positive");
    if (!(params.nearPlane > 0.0)) throw InvalidInput("render_hair: near plane must be positive");
    if (params.occluder && (params.occluder->width() != cam.width || params.occluder->height() != cam.height))
        throw InvalidInput("render_hair: occluder size differs from camera image");

    const int w = cam.width, h = cam.height;
    const double radius = 0.5 * params.lineWidth;
    const double r2 = radius * radius;

    Grid<ZKey> zbuf(w, h);
    Grid<Vec2> color(w, h, Vec2::Zero());
    RenderOutput out;

    for (std::size_t si = 0; si < model.strands.size(); ++si) {
        const auto& pts = model.strands[si].points;
        for (std::size_t j = 0; j + 1 < pts.size(); ++j) {
            if (!pts[j].allFinite() || !pts[j + 1].allFinite()) throw InvalidInput("render_hair: non-finite strand point");
            Vec3 q0 = cam.to_camera(pts[j].cast<double>());
            Vec3 q1 = cam.to_camera(pts[j + 1].cast<double>());
            // Near-plane clip.
            if (q0.z() < params.nearPlane && q1.z() < params.nearPlane) continue;
            if (q0.z() < params.nearPlane || q1.z() < params.nearPlane) {
                const double t = (params.nearPlane - q0.z()) / (q1.z() - q0.z());
                const Vec3 cut = q0 + t * (q1 - q0);
                (q0.z() < params.nearPlane ? q0 : q1) = cut;
            }
            const Vec2 a = cam.project(q0), b = cam.project(q1);
            const Vec2 d2 = b - a;
            const double A = d2.squaredNorm();
            if (!(A > 1e-24)) {
                ++out.degenerateSegments;
                continue;
            }
            const Vec2 dir = d2 / std::sqrt(A);
            const Vec3 D = q1 - q0;
            const double DD = D.squaredNorm();

            auto lo = [](double v, int n) { return static_cast<int>(std::clamp(std::ceil(v), 0.0, static_cast<double>(n))); };
            auto hi = [](double v, int n) { return static_cast<int>(std::clamp(std::floor(v), -1.0, static_cast<double>(n - 1))); };
            const int x0 = lo(std::min(a.x(), b.x()) - radius, w), x1 = hi(std::max(a.x(), b.x()) + radius, w);
            const int y0 = lo(std::min(a.y(), b.y()) - radius, h), y1 = hi(std::max(a.y(), b.y()) + radius, h);
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    // Screen parameters s in [0, 1] with |a + s d2 - c| <= radius.
                    const Vec2 ac = a - Vec2(x, y);
                    const double B = d2.dot(ac);
                    const double disc = B * B - A * (ac.squaredNorm() - r2);
                    if (disc < 0.0) continue;
                    const double root = std::sqrt(disc);
                    const double s0 = std::max(0.0, (-B - root) / A);
                    const double s1 = std::min(1.0, (-B + root) / A);
                    if (s0 > s1) continue;
                    // Screen parameter to 3D parameter under perspective.
                    auto lift = [&](double s) { return s * q0.z() / ((1.0 - s) * q1.z() + s * q0.z()); };
                    const double u0 = lift(s0), u1 = lift(s1);
                    const double u = DD > 0.0 ? std::clamp(-q0.dot(D) / DD, u0, u1) : u0;
                    const ZKey key{(q0 + u * D).norm(), static_cast<int>(si), static_cast<int>(j)};
                    if (key < zbuf(x, y)) {
                        zbuf(x, y) = key;
                        color(x, y) = dir;
                    }
                }
            }
        }
    }

    out.strandMap = StrandMap(w, h, kBackground);
    out.rawDistance = Grid<double>(w, h, 0.0);
    out.mask = Mask(w, h, 0);
    out.strandIndex = Grid<int>(w, h, -1);
    out.segmentIndex = Grid<int>(w, h, -1);
    double dNear = std::numeric_limits<double>::infinity(), dFar = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const ZKey& k = zbuf(x, y);
            if (k.strand < 0) continue;
            if (params.occluder && (*params.occluder)(x, y)) continue;
            out.mask(x, y) = 1;
            out.rawDistance(x, y) = k.distance;
            out.strandIndex(x, y) = k.strand;
            out.segmentIndex(x, y) = k.segment;
            const Vec2& d = color(x, y);
            out.strandMap(x, y) = {1.0, std::clamp(d.x() / 2.0 + 0.5, 0.0, 1.0), std::clamp(d.y() / 2.0 + 0.5, 0.0, 1.0)};
            dNear = std::min(dNear, k.distance);
            dFar = std::max(dFar, k.distance);
        }

    out.depth = DepthMap{Grid<double>(w, h, 0.0), out.mask, 0.0, 0.0};
    out.empty = count_set(out.mask) == 0;
    if (!out.empty) {
        out.depth.dNear = dNear;
        out.depth.dFar = dFar;
        const double range = dFar - dNear;
        for (std::size_t i = 0; i < out.mask.size(); ++i) {
            if (!out.mask.at_index(i)) continue;
            out.depth.values.at_index(i) = range > 0.0 ? (dFar - out.rawDistance.at_index(i)) / range : 1.0;
        }
    }
    return out;
}

double compute_iou(const Mask& a, const Mask& b) {
    require_same_shape(a, b, "compute_iou");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool x = a.at_index(i) != 0, y = b.at_index(i) != 0;
        inter += x && y;
        uni += x || y;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace hairstep
