#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <Eigen/Core>

#include "hairstep/hair3d.hpp"
#include "hairstep/image.hpp"
#include "hairstep/repr.hpp"

namespace hairstep {

/// Pinhole camera, OpenCV axes: camera x right, y down, z forward. Pixel
/// (i, j) has its center at image coordinate (i, j).
struct Camera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    /// World-to-camera rigid transform.
    Eigen::Matrix4d extrinsics = Eigen::Matrix4d::Identity();
    int width = 0;
    int height = 0;

    Vec3 to_camera(const Vec3& world) const;
    /// Image coordinates of a camera-space point with z > 0.
    Vec2 project(const Vec3& cam) const;

    /// Camera at `eye` looking at `target`; `up` is the world direction that
    /// should appear upward in the image. Vertical field of view in degrees.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fovYDeg, int width, int height);
    /// Camera on a sphere of `distance` around `target`; azimuth about +y
    /// (0 = looking from +z), elevation above the xz plane.
    static Camera orbit(const Vec3& target, double distance, double azimuthDeg, double elevationDeg, double fovYDeg,
                        int width, int height);
};

/// Throws InvalidInput unless fx, fy > 0, size positive and the extrinsic
/// rotation is orthonormal within 1e-6.
void validate(const Camera& cam);

/// JSON {fx, fy, cx, cy, extrinsics: 16 floats row-major, width, height}.
Camera read_camera(const std::filesystem::path& path);
void write_camera(const std::filesystem::path& path, const Camera& cam);

struct RenderParams {
    /// Pixels whose center lies within lineWidth / 2 of a projected segment
    /// are covered by it.
    double lineWidth = 1.0;
    double nearPlane = 1e-3;
    /// Optional occluder; covered pixels here are removed from the output.
    const Mask* occluder = nullptr;
};

struct RenderOutput {
    StrandMap strandMap;
    DepthMap depth;
    /// Euclidean distance to the camera center of the visible strand point;
    /// 0 off the mask.
    Grid<double> rawDistance;
    Mask mask;
    /// Winning strand per pixel, -1 where uncovered.
    Grid<int> strandIndex;
    /// Winning segment within that strand, -1 where uncovered.
    Grid<int> segmentIndex;
    /// True when nothing of the model landed in front of the camera.
    bool empty = true;
    /// Segments whose projection collapsed to a point and were not drawn.
    std::size_t degenerateSegments = 0;
};

/// Z-buffered line rendering of a strand model to strand map, nearness depth
/// map and mask. The visible segment at a pixel is the one with the smallest
/// camera distance over its covered part; exact ties go to the lower strand
/// index, then the lower segment index.
RenderOutput render_hair(const HairModel& model, const Camera& cam, const RenderParams& params = {});

/// |A ∩ B| / |A ∪ B|; 1 when both masks are empty.
double compute_iou(const Mask& a, const Mask& b);

}  // namespace hairstep
