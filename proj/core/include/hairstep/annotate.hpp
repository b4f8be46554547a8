#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hairstep/image.hpp"
#include "hairstep/repr.hpp"

namespace hairstep {

// ---------------------------------------------------------------------------
// Directed strokes -> dense strand map
// ---------------------------------------------------------------------------

/// One directed polyline per stroke, root first, in pixel coordinates.
struct StrokeSet {
    std::string imageId;
    std::vector<std::vector<Vec2>> strokes;
};

struct RasterizedStrokes {
    /// Mask channel marks stroke pixels only; everything else is background.
    StrandMap sparse;
    /// Strokes that contributed no pixel (degenerate or entirely off-mask).
    int skipped = 0;
};

/// Draws each stroke as 1-px lines. Interior line pixels take their segment
/// direction; vertex pixels take the normalized mean of the adjacent segment
/// directions. Off-mask pixels are dropped; later strokes overwrite earlier.
RasterizedStrokes rasterize_strokes(const StrokeSet& strokes, const Mask& mask);

struct InterpolationResult {
    StrandMap dense;
    /// One representative pixel per mask component that had no constraint
    /// and was filled from the geodesically nearest constraint.
    std::vector<Pixel> unconstrainedComponents;
};

/// Harmonic fill of the (g, b) channels over `mask` with the sparse map's
/// mask pixels held fixed and zero-flux at the mask boundary, followed by
/// renormalization to unit directions.
InterpolationResult interpolate_strand_map(const StrandMap& sparse, const Mask& mask);

// ---------------------------------------------------------------------------
// Super-pixels and depth pairs
// ---------------------------------------------------------------------------

struct SuperPixelMap {
    /// 0 off the hair mask, otherwise in [1, count].
    Grid<int> labels;
    int count = 0;
    /// Unordered label pairs (first < second), sorted.
    std::vector<std::pair<int, int>> adjacency;
};

struct SuperPixelParams {
    /// Hair pixels per super-pixel before the hair/face area scaling.
    double density = 100.0;
    double compactness = 10.0;
    int iterations = 10;
    std::uint64_t seed = 0;
};

/// Target label count: max(2, round(area(hair)/area(face) * area(hair)/density)),
/// or max(2, round(area(hair)/density)) when the face mask is empty; never
/// more than the hair area.
int superpixel_target_count(std::size_t hairArea, std::size_t faceArea, double density);

/// SLIC-style k-means on (intensity, x, y) restricted to the hair mask, then
/// split/merge so every label is 4-connected and the count hits the target
/// (or the number of mask components, if larger).
SuperPixelMap generate_superpixels(const GrayImage& image, const Mask& hairMask, const Mask& faceMask,
                                   const SuperPixelParams& params);

/// Recomputes adjacency from labels (4-neighbourhood).
std::vector<std::pair<int, int>> superpixel_adjacency(const Grid<int>& labels);

struct PairSample {
    std::string pairId;
    Pixel p1;
    Pixel p2;
    std::pair<int, int> superPixels;
};

/// For every adjacency, `perAdjacency` pairs: one pixel uniform in each of the
/// two super-pixels, red/blue (p1/p2) order chosen by a fair coin. Pair ids
/// are "<imageId>#<n>".
std::vector<PairSample> sample_pairs(const SuperPixelMap& sp, int perAdjacency, std::uint64_t seed,
                                     const std::string& imageId = "img");

/// Image id encoded in a pair id (text before the last '#'), or the whole id.
std::string image_id_of(const std::string& pairId);

enum class Choice { Red, Blue, Unsure };

const char* to_string(Choice c);
std::optional<Choice> parse_choice(const std::string& s);

struct AnnotationAnswer {
    std::string pairId;
    int groupId = 1;
    Choice choice = Choice::Unsure;
    double elapsed = 0.0;
};

struct AggregatedLabel {
    std::string pairId;
    /// +1: red (p1) is closer; -1: blue (p2) is closer. 0 when invalid.
    int r = 0;
    bool valid = false;
};

struct AggregationStats {
    std::size_t pairs = 0;
    std::size_t valid = 0;
    std::size_t answers = 0;
    /// valid / pairs.
    double validFraction = 0.0;
    /// Among pairs answered by all three groups, fraction where the three
    /// answers are certain and identical.
    double agreementRate = 0.0;
    double medianElapsed = 0.0;
};

inline constexpr int kGroupCount = 3;

/// Three-group consensus: a pair is valid only when groups 1, 2 and 3 all
/// answered with the same certain choice. Labels follow the order in which
/// pair ids first appear in `answers`.
std::pair<std::vector<AggregatedLabel>, AggregationStats> aggregate_answers(const std::vector<AnnotationAnswer>& answers);

}  // namespace hairstep
