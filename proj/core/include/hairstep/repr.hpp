#pragma once

#include <array>
#include <vector>

#include "hairstep/image.hpp"

namespace hairstep {

/// (mask, g, b) with every channel in [0, 1].
using Rgb = std::array<double, 3>;

/// Hair mask in the first channel and directed 2D growth direction in the
/// other two: pixel = (m, dx/2 + 0.5, dy/2 + 0.5). Background is (0, 0.5, 0.5).
using StrandMap = Grid<Rgb>;

/// Per-pixel unit 2D vector on the mask, zero elsewhere.
using DirectionField = Grid<Vec2>;

inline constexpr Rgb kBackground{0.0, 0.5, 0.5};

/// Nearness map over the hair mask: larger value = closer to the camera.
struct DepthMap {
    Grid<double> values;
    Mask valid;
    double dNear = 0.0;
    double dFar = 0.0;

    int width() const { return values.width(); }
    int height() const { return values.height(); }
};

/// Per-pixel orientation in degrees, in [0, 180), over a mask.
struct UndirectedOrientationMap {
    Grid<double> angles;
    Mask mask;
};

struct DecodedStrandMap {
    Mask mask;
    DirectionField directions;
    /// Mask pixels whose stored direction decoded to zero length; their
    /// direction is set to (0, 1).
    std::vector<Pixel> flagged;
};

bool on_mask(const Rgb& px);

/// Direction stored in a pixel, 2*(g, b) - (1, 1), without normalization.
Vec2 raw_direction(const Rgb& px);

StrandMap encode_strand_map(const Mask& mask, const DirectionField& dirs);
DecodedStrandMap decode_strand_map(const StrandMap& map);

/// Rounds every channel to the nearest multiple of 1/255 (8-bit storage).
StrandMap quantize_8bit(const StrandMap& map);

/// Angle of a direction in degrees, in [0, 360), +x = 0, +y (down) = 90.
double direction_angle_deg(const Vec2& d);

UndirectedOrientationMap to_undirected(const StrandMap& map);

struct GaborParams {
    int numOrients = 180;
    double wavelength = 4.0;
    double sigma = 2.0;
    /// Envelope width across the strand divided by width along it.
    double aspect = 1.0;
};

/// Classic undirected orientation estimate: for each masked pixel, the
/// orientation bin k (angle k * 180 / numOrients) whose complex Gabor
/// response magnitude is largest. Ties resolve to the smaller angle.
UndirectedOrientationMap gabor_orientation(const GrayImage& gray, const Mask& mask, const GaborParams& params = {});

/// Angles, in degrees, of the bins used by gabor_orientation.
std::vector<double> gabor_bin_angles(int numOrients);

struct Transform2D {
    /// Degrees; positive turns clockwise on screen (+y down), so +90 maps
    /// (1, 0) to (0, 1).
    double rotationDeg = 0.0;
    double scale = 1.0;
    Vec2 translation = Vec2::Zero();
    bool hflip = false;
};

struct AugmentResult {
    StrandMap strandMap;
    DepthMap depth;
    /// True when the transform moved the whole mask out of frame.
    bool emptyMask = false;
};

/// Resamples strand map and depth map with one shared similarity transform
/// about the image center. Directions are mirrored and rotated along with
/// positions; depth values are carried unchanged (nearest-neighbour).
AugmentResult augment_2d(const StrandMap& map, const DepthMap& depth, const Transform2D& transform);

/// Direction mapping used by augment_2d (no translation or scale effect).
Vec2 transform_direction(const Vec2& d, const Transform2D& transform);

}  // namespace hairstep
