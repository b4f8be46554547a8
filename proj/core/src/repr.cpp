#include "hairstep/repr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hairstep {

namespace {

constexpr double kUnitTolerance = 1e-3;
// Below this decoded length a mask pixel carries no usable direction.
constexpr double kDegenerateLength = 0.05;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

bool on_mask(const Rgb& px) { return px[0] >= 0.5; }

Vec2 raw_direction(const Rgb& px) { return {2.0 * px[1] - 1.0, 2.0 * px[2] - 1.0}; }

StrandMap encode_strand_map(const Mask& mask, const DirectionField& dirs) {
    require_same_shape(mask, dirs, "encode_strand_map");
    StrandMap out(mask.width(), mask.height(), kBackground);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask.at_index(i)) continue;
        const Vec2& d = dirs.at_index(i);
        if (!d.allFinite() || std::abs(d.norm() - 1.0) > kUnitTolerance)
            throw InvalidInput("encode_strand_map: direction on mask is not unit length");
        out.at_index(i) = {1.0, clamp01(d.x() / 2.0 + 0.5), clamp01(d.y() / 2.0 + 0.5)};
    }
    return out;
}

DecodedStrandMap decode_strand_map(const StrandMap& map) {
    DecodedStrandMap out{Mask(map.width(), map.height(), 0), DirectionField(map.width(), map.height(), Vec2::Zero()), {}};
    for (int y = 0; y < map.height(); ++y) {
        for (int x = 0; x < map.width(); ++x) {
            const Rgb& px = map(x, y);
            if (!on_mask(px)) continue;
            out.mask(x, y) = 1;
            const Vec2 d = raw_direction(px);
            const double n = d.norm();
            if (!(n >= kDegenerateLength)) {
                out.directions(x, y) = Vec2(0.0, 1.0);
                out.flagged.push_back({x, y});
            } else {
                out.directions(x, y) = d / n;
            }
        }
    }
    return out;
}

StrandMap quantize_8bit(const StrandMap& map) {
    StrandMap out = map;
    for (auto& px : out.data())
        for (double& c : px) c = std::round(clamp01(c) * 255.0) / 255.0;
    return out;
}

double direction_angle_deg(const Vec2& d) {
    double a = std::atan2(d.y(), d.x()) * 180.0 / std::numbers::pi;
    if (a < 0.0) a += 360.0;
    if (a >= 360.0) a -= 360.0;
    return a;
}

UndirectedOrientationMap to_undirected(const StrandMap& map) {
    const DecodedStrandMap dec = decode_strand_map(map);
    UndirectedOrientationMap out{Grid<double>(map.width(), map.height(), 0.0), dec.mask};
    for (std::size_t i = 0; i < dec.mask.size(); ++i) {
        if (!dec.mask.at_index(i)) continue;
        double a = std::fmod(direction_angle_deg(dec.directions.at_index(i)), 180.0);
        if (a >= 180.0) a -= 180.0;
        out.angles.at_index(i) = a;
    }
    return out;
}

std::vector<double> gabor_bin_angles(int numOrients) {
    std::vector<double> angles(static_cast<std::size_t>(std::max(numOrients, 0)));
    for (int k = 0; k < numOrients; ++k) angles[static_cast<std::size_t>(k)] = 180.0 * k / numOrients;
    return angles;
}

UndirectedOrientationMap gabor_orientation(const GrayImage& gray, const Mask& mask, const GaborParams& params) {
    require_same_shape(gray, mask, "gabor_orientation");
    if (params.numOrients < 2) throw InvalidInput("gabor_orientation: numOrients must be >= 2");
    if (!(params.wavelength > 0.0) || !(params.sigma > 0.0) || !(params.aspect > 0.0))
        throw InvalidInput("gabor_orientation: kernel parameters must be positive");

    const int half = static_cast<int>(std::ceil(3.0 * params.sigma / std::min(params.aspect, 1.0)));
    const int side = 2 * half + 1;
    if (side > gray.width() || side > gray.height())
        throw InvalidInput("gabor_orientation: kernel larger than image");

    // Kernel k varies across the line direction (cos t, sin t); a strand
    // running along t produces the strongest response in bin t.
    const std::vector<double> angles = gabor_bin_angles(params.numOrients);
    const std::size_t taps = static_cast<std::size_t>(side) * static_cast<std::size_t>(side);
    std::vector<double> kre(angles.size() * taps), kim(angles.size() * taps);
    for (std::size_t k = 0; k < angles.size(); ++k) {
        const double t = angles[k] * std::numbers::pi / 180.0;
        const double c = std::cos(t), s = std::sin(t);
        std::size_t j = k * taps;
        for (int dy = -half; dy <= half; ++dy) {
            for (int dx = -half; dx <= half; ++dx, ++j) {
                const double along = dx * c + dy * s;
                const double across = -dx * s + dy * c;
                const double env = std::exp(-(across * across + params.aspect * params.aspect * along * along) /
                                            (2.0 * params.sigma * params.sigma));
                const double phase = 2.0 * std::numbers::pi * across / params.wavelength;
                kre[j] = env * std::cos(phase);
                kim[j] = env * std::sin(phase);
            }
        }
    }

    UndirectedOrientationMap out{Grid<double>(gray.width(), gray.height(), 0.0), mask};
    std::vector<double> patch(taps);
    for (int y = 0; y < gray.height(); ++y) {
        for (int x = 0; x < gray.width(); ++x) {
            if (!mask(x, y)) continue;
            // Clamp-to-edge patch with its mean removed, so a brightness offset
            // cannot change any response.
            double mean = 0.0;
            std::size_t j = 0;
            for (int dy = -half; dy <= half; ++dy) {
                const int yy = std::clamp(y + dy, 0, gray.height() - 1);
                for (int dx = -half; dx <= half; ++dx, ++j) {
                    const int xx = std::clamp(x + dx, 0, gray.width() - 1);
                    patch[j] = gray(xx, yy);
                    mean += patch[j];
                }
            }
            mean /= static_cast<double>(taps);
            double spread = 0.0;
            for (double& v : patch) {
                v -= mean;
                spread = std::max(spread, std::abs(v));
            }
            if (spread <= 1e-12 * (1.0 + std::abs(mean))) continue;  // flat patch: all responses equal, bin 0

            std::size_t best = 0;
            double bestMag = -1.0;
            for (std::size_t k = 0; k < angles.size(); ++k) {
                const double* re = &kre[k * taps];
                const double* im = &kim[k * taps];
                double sr = 0.0, si = 0.0;
                for (std::size_t t = 0; t < taps; ++t) {
                    sr += re[t] * patch[t];
                    si += im[t] * patch[t];
                }
                const double mag = std::sqrt(sr * sr + si * si);
                if (mag > bestMag * (1.0 + 1e-9) + 1e-15) {
                    bestMag = mag;
                    best = k;
                }
            }
            out.angles(x, y) = angles[best];
        }
    }
    return out;
}

Vec2 transform_direction(const Vec2& d, const Transform2D& transform) {
    Vec2 v = d;
    if (transform.hflip) v.x() = -v.x();
    const double t = transform.rotationDeg * std::numbers::pi / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

AugmentResult augment_2d(const StrandMap& map, const DepthMap& depth, const Transform2D& transform) {
    require_same_shape(map, depth.values, "augment_2d");
    require_same_shape(depth.values, depth.valid, "augment_2d depth");
    if (!(transform.scale > 0.0)) throw InvalidInput("augment_2d: scale must be positive");

    const int w = map.width(), h = map.height();
    const Vec2 center((w - 1) / 2.0, (h - 1) / 2.0);
    const double t = transform.rotationDeg * std::numbers::pi / 180.0;
    const double c = std::cos(t), s = std::sin(t);

    AugmentResult out{StrandMap(w, h, kBackground),
                      DepthMap{Grid<double>(w, h, 0.0), Mask(w, h, 0), depth.dNear, depth.dFar},
                      false};
    bool anyMask = false;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Inverse map: undo translation, rotation and scale, then the flip.
            const Vec2 q = Vec2(x, y) - center - transform.translation;
            Vec2 src(c * q.x() + s * q.y(), -s * q.x() + c * q.y());
            src = src / transform.scale + center;
            if (transform.hflip) src.x() = (w - 1) - src.x();
            const int sx = static_cast<int>(std::lround(src.x()));
            const int sy = static_cast<int>(std::lround(src.y()));
            if (!map.contains(sx, sy)) continue;

            const Rgb& px = map(sx, sy);
            if (on_mask(px)) {
                Vec2 d = raw_direction(px);
                const double n = d.norm();
                d = n >= kDegenerateLength ? Vec2(d / n) : Vec2(0.0, 1.0);
                const Vec2 r = transform_direction(d, transform);
                out.strandMap(x, y) = {1.0, clamp01(r.x() / 2.0 + 0.5), clamp01(r.y() / 2.0 + 0.5)};
                anyMask = true;
            }
            if (depth.valid(sx, sy)) {
                out.depth.valid(x, y) = 1;
                out.depth.values(x, y) = depth.values(sx, sy);
            }
        }
    }
    bool sourceHadMask = false;
    for (const auto& px : map.data()) sourceHadMask = sourceHadMask || on_mask(px);
    out.emptyMask = sourceHadMask && !anyMask;
    return out;
}

}  // namespace hairstep
