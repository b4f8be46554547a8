#pragma once

// Random instance generators shared by unit and acceptance tests.

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <numbers>
#include <vector>

#include "hairstep/annotate.hpp"
#include "hairstep/hair3d.hpp"
#include "hairstep/metrics.hpp"
#include "hairstep/random.hpp"
#include "hairstep/render.hpp"
#include "hairstep/repr.hpp"

namespace hairstep::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "hairstep") {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Vec2 random_unit(Rng& rng) {
    const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return {std::cos(a), std::sin(a)};
}

inline Vec2 unit_at_deg(double deg) {
    const double a = deg * std::numbers::pi / 180.0;
    return {std::cos(a), std::sin(a)};
}

inline Rgb encode_pixel(const Vec2& d) { return {1.0, d.x() / 2.0 + 0.5, d.y() / 2.0 + 0.5}; }

/// Strand map with ~`coverage` of pixels on the mask, random unit directions
/// (not quantized).
inline StrandMap random_strand_map(int w, int h, Rng& rng, double coverage = 0.7) {
    StrandMap m(w, h, kBackground);
    for (auto& px : m.data())
        if (rng.uniform() < coverage) px = encode_pixel(random_unit(rng));
    return m;
}

inline DepthMap random_depth(int w, int h, Rng& rng, double coverage = 0.8) {
    DepthMap d{Grid<double>(w, h, 0.0), Mask(w, h, 0), 1.0, 2.0};
    for (std::size_t i = 0; i < d.values.size(); ++i)
        if (rng.uniform() < coverage) {
            d.valid.at_index(i) = 1;
            d.values.at_index(i) = rng.uniform();
        }
    return d;
}

inline std::vector<PairLabel> random_pairs(int w, int h, Rng& rng, std::size_t n) {
    std::vector<PairLabel> pairs;
    while (pairs.size() < n) {
        PairLabel p{{static_cast<int>(rng.index(static_cast<std::uint64_t>(w))), static_cast<int>(rng.index(static_cast<std::uint64_t>(h)))},
                    {static_cast<int>(rng.index(static_cast<std::uint64_t>(w))), static_cast<int>(rng.index(static_cast<std::uint64_t>(h)))},
                    rng.coin() ? 1 : -1};
        if (p.p1 != p.p2) pairs.push_back(p);
    }
    return pairs;
}

inline Mask random_mask(int w, int h, Rng& rng, double coverage) {
    Mask m(w, h, 0);
    for (auto& v : m.data()) v = rng.uniform() < coverage ? 1 : 0;
    return m;
}

/// Grid with random occupancy in {0, 1} (and a few fractional values) and
/// orientation satisfying the VolumeGrid invariant.
inline VolumeGrid random_volume(std::array<int, 3> dims, Rng& rng, double coverage = 0.4) {
    VolumeGrid g(dims, Box3{Vec3(-1, -1, -1), Vec3(1, 1, 1)});
    for (std::size_t i = 0; i < g.voxel_count(); ++i) {
        const double u = rng.uniform();
        g.occupancy[i] = u < coverage ? 1.0f : (u < coverage + 0.1 ? static_cast<float>(rng.uniform(0.0, 1.0)) : 0.0f);
        if (g.occupancy[i] >= 0.5f) {
            Vec3 v(rng.normal(), rng.normal(), rng.normal());
            g.orientation[i] = v.normalized().cast<float>();
        }
    }
    return g;
}

inline HairModel test_wig(std::uint64_t seed, std::size_t strands = 1000) {
    WigParams p;
    p.strands = strands;
    p.segments = 20;
    p.segmentLength = 0.04;
    return make_procedural_wig(p, seed);
}

inline Camera front_camera(int size = 128) {
    return Camera::orbit(Vec3(0.0, -0.1, 0.0), 3.0, 0.0, 0.0, 35.0, size, size);
}

}  // namespace hairstep::testing
