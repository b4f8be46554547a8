#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hairstep/image.hpp"

namespace hairstep {

using Vec3f = Eigen::Vector3f;

/// Root-first polyline in canonical head space.
struct Strand {
    std::vector<Vec3f> points;
};

struct HairModel {
    std::vector<Strand> strands;
    std::string space = "canonical";

    std::size_t vertex_count() const;
};

/// Throws InvalidInput unless the model is non-empty, finite, every strand
/// has >= 2 points and no two consecutive points coincide.
void validate(const HairModel& model);

// ---------------------------------------------------------------------------
// Strand file: little-endian int32 strandCount; per strand int32 vertexCount
// followed by vertexCount * (x, y, z) float32.
// ---------------------------------------------------------------------------

HairModel read_hair(const std::filesystem::path& path);
void write_hair(const std::filesystem::path& path, const HairModel& model);
HairModel parse_hair(const std::vector<char>& bytes);
std::vector<char> serialize_hair(const HairModel& model);

// ---------------------------------------------------------------------------
// Volume fields
// ---------------------------------------------------------------------------

struct Box3 {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Ones();

    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

/// Occupancy and orientation sampled at voxel centers. Row-major, x fastest.
/// Orientation is unit where occupancy >= 0.5 and zero elsewhere.
struct VolumeGrid {
    std::array<int, 3> dims{0, 0, 0};
    Box3 bbox;
    std::vector<float> occupancy;
    std::vector<Vec3f> orientation;

    VolumeGrid() = default;
    VolumeGrid(std::array<int, 3> dims, Box3 bbox);

    std::size_t voxel_count() const { return occupancy.size(); }
    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims[1]) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(dims[0]) +
               static_cast<std::size_t>(x);
    }
    bool in_range(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
    }
    Vec3 voxel_size() const;
    Vec3 center(int x, int y, int z) const;
    /// Index of the voxel whose cell contains p (clamped to the grid).
    std::array<int, 3> cell_of(const Vec3& p) const;
    bool occupied(std::size_t i, double threshold = 0.5) const { return occupancy[i] >= threshold; }
};

/// Throws InvalidInput if dims are non-positive, the box is empty or the
/// orientation/occupancy invariant is broken.
void validate(const VolumeGrid& grid);

struct FieldBuildReport {
    /// Strand points that fell outside the box and were clamped onto it.
    std::size_t clampedPoints = 0;
    /// Occupied voxels whose tangent sum cancelled; orientation copied from
    /// the nearest voxel that had one.
    std::vector<std::size_t> degenerateVoxels;
};

struct FieldBuildResult {
    VolumeGrid grid;
    FieldBuildReport report;
};

/// Voxelizes strands: every strand is resampled at <= 0.5 voxel spacing; the
/// voxel containing each sample, and every voxel whose center lies within
/// `radius` voxel edges of it, becomes occupied and accumulates the sample's
/// unit tangent. Orientation is the normalized tangent sum.
FieldBuildResult strands_to_fields(const HairModel& model, std::array<int, 3> dims, const Box3& bbox, double radius);

struct SamplePoint {
    Vec3 position;
    int occLabel = 0;
    Vec3 orientLabel = Vec3::Zero();
};

struct SampleResult {
    std::vector<SamplePoint> points;
    /// Number of leading points drawn uniformly in the box; the rest were
    /// drawn from the surface band.
    std::size_t uniformCount = 0;
    /// Set when the grid has no occupancy boundary and every point is uniform.
    bool surfaceFallback = false;
};

/// Voxels that are occupied with an empty 6-neighbour, or empty with an
/// occupied 6-neighbour.
std::vector<std::size_t> boundary_voxels(const VolumeGrid& grid);

/// n/2 points uniform in the box and n/2 inside voxels within `surfaceBand`
/// voxel edges (center to center) of the occupancy boundary. Labels come
/// from the voxel containing each point.
SampleResult sample_points(const VolumeGrid& grid, double surfaceBand, std::size_t n, std::uint64_t seed);

struct FieldSample {
    double occupancy = 0.0;
    Vec3 orientation = Vec3::Zero();
};

/// Trilinear interpolation between voxel centers (edge values extend to the
/// box faces). Orientation is the normalized blend, zero when the blend is
/// shorter than 1e-6. nullopt outside the box.
std::optional<FieldSample> trilinear_sample(const VolumeGrid& grid, const Vec3& p);

struct Root {
    Vec3 position;
    Vec3 direction;
};

struct GrowParams {
    double step = 0.0;  // canonical units; 0 = half a voxel edge
    double occThreshold = 0.5;
    int maxSteps = 300;
    double inertia = 0.3;
};

struct GrowResult {
    HairModel model;
    /// Roots that produced no strand (empty or unoriented field at the root,
    /// or fewer than two points).
    std::vector<std::size_t> skippedRoots;
    /// Steps where the field pointed against the travel direction and was flipped.
    std::size_t flips = 0;
};

/// Integrates each root through the orientation field:
/// d = normalize(inertia * previous + (1 - inertia) * orient(p)), with
/// orient(p) negated when it opposes the previous direction; p += step * d.
/// A strand ends before the first point that leaves the box or drops below
/// occThreshold, or after maxSteps.
GrowResult grow_strands(const VolumeGrid& grid, const std::vector<Root>& roots, const GrowParams& params);

/// First vertex and first-segment direction of every strand.
std::vector<Root> roots_from_model(const HairModel& model);

/// Roots spread over the upper cap (polar angle <= maxPolarDeg from +y) of a
/// sphere, pointing along the outward normal.
std::vector<Root> hemisphere_scalp_roots(const Vec3& center, double radius, std::size_t count, double maxPolarDeg,
                                         std::uint64_t seed);

// Root file: JSON {"roots": [{"position": [x,y,z], "direction": [x,y,z]}, ...]}
std::vector<Root> read_roots(const std::filesystem::path& path);
void write_roots(const std::filesystem::path& path, const std::vector<Root>& roots);

// VolumeGrid files: `<base>.bin` holds float32 occupancy for every voxel, then
// float32 (x, y, z) orientation per voxel; `<base>.json` holds {dims, bbox}.
void write_volume(const std::filesystem::path& binPath, const VolumeGrid& grid);
VolumeGrid read_volume(const std::filesystem::path& binPath);

struct WigParams {
    std::size_t strands = 2000;
    int segments = 40;
    double headRadius = 0.5;
    double segmentLength = 0.025;
    double maxPolarDeg = 75.0;
    /// Strength of the per-strand random bend.
    double curl = 0.35;
};

/// Deterministic synthetic hairstyle: strands rooted on a hemispherical
/// scalp that leave along the normal, fall under a gravity pull and stay
/// outside the head sphere.
HairModel make_procedural_wig(const WigParams& params, std::uint64_t seed);

}  // namespace hairstep
