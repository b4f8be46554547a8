#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hairstep/hair3d.hpp"
#include "hairstep/image.hpp"
#include "hairstep/repr.hpp"

namespace hairstep {

struct LossConfig {
    /// Ranking margin.
    double epsilon = 0.05;
    /// Weight of the L1 term against the pseudo-label depth.
    double beta = 0.1;
    /// Perceptual-term weight; kept for configuration parity, not used here.
    double alpha = 0.1;
};

/// Ordinal label: r = +1 when p1 is closer than p2, -1 otherwise.
struct PairLabel {
    Pixel p1;
    Pixel p2;
    int r = 1;
};

/// Mean over a pixel set; `value` is empty when the set is empty.
struct MeanOverPixels {
    std::optional<double> value;
    std::size_t count = 0;
};

/// Angle in degrees between the unit directions decoded from two strand-map
/// pixels, in [0, 180].
double directed_error_deg(const Rgb& a, const Rgb& b);
/// min(theta, 180 - theta) of the directed error, in [0, 90].
double undirected_error_deg(const Rgb& a, const Rgb& b);

/// Mean directed angular error over the intersection of both masks.
MeanOverPixels hair_sale(const StrandMap& rendered, const StrandMap& groundTruth);
/// Same region, orientation error modulo 180 degrees.
MeanOverPixels hair_sale_undirected(const StrandMap& rendered, const StrandMap& groundTruth);

/// Fraction of pairs whose depth order agrees with the label:
/// mean of max(0, r * sign(D(p1) - D(p2))). Pairs with an endpoint outside
/// `region` are dropped; `count` is the number kept.
MeanOverPixels hair_rida(const DepthMap& rendered, const std::vector<PairLabel>& pairs, const Mask& region);

/// |pred-occupied ∩ gt-occupied| / |pred-occupied|.
std::optional<double> occupancy_precision(const VolumeGrid& pred, const VolumeGrid& gt, double threshold = 0.5);
/// Mean over gt-occupied voxels of |o_pred - o_gt|.
std::optional<double> orientation_l2(const VolumeGrid& pred, const VolumeGrid& gt, double threshold = 0.5);

/// sum |pred - gt| over all pixels and channels / (3 * |gt mask|).
std::optional<double> l_strand_l1(const StrandMap& pred, const StrandMap& gt);

/// Margin ranking loss: mean of max(0, -(D(p1) - D(p2)) * r + epsilon).
double l_rank(const DepthMap& depth, const std::vector<PairLabel>& pairs, const LossConfig& cfg = {});

/// beta * mean |depth - pseudo| over the mask + l_rank.
double l_depth(const DepthMap& depth, const DepthMap& pseudo, const std::vector<PairLabel>& pairs, const LossConfig& cfg = {});

struct MetricReport {
    std::string imageId;
    std::optional<double> hairSale;
    std::optional<double> hairSaleUndirected;
    std::optional<double> hairRida;
    double iou = 0.0;
    std::size_t pixelCount = 0;
    std::size_t pairCount = 0;
};

/// Scores one prediction against ground truth. HairRida is computed on the
/// predicted depth when both depth and pairs are given, over the
/// intersection of the two strand-map masks.
MetricReport evaluate_image(const StrandMap& pred, const StrandMap& gt, const DepthMap* predDepth,
                            const std::vector<PairLabel>& pairs);

}  // namespace hairstep
