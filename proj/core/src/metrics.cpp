#include "hairstep/metrics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numbers>

#include "hairstep/render.hpp"

namespace hairstep {

namespace {

Vec2 unit_direction(const Rgb& px) {
    const Vec2 d = raw_direction(px);
    const double n = d.norm();
    return n >= 0.05 ? Vec2(d / n) : Vec2(0.0, 1.0);
}

template <typename PerPixel>
MeanOverPixels mean_over_intersection(const StrandMap& a, const StrandMap& b, PerPixel&& err) {
    require_same_shape(a, b, "hair_sale");
    double sum = 0.0;
    std::size_t k = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!on_mask(a.at_index(i)) || !on_mask(b.at_index(i))) continue;
        sum += err(a.at_index(i), b.at_index(i));
        ++k;
    }
    if (k == 0) return {std::nullopt, 0};
    return {sum / static_cast<double>(k), k};
}

void require_label(const PairLabel& p) {
    if (p.r != 1 && p.r != -1) throw InvalidInput("pair label r must be +1 or -1");
    if (p.p1 == p.p2) throw InvalidInput("pair endpoints must differ");
}

void require_same_volume(const VolumeGrid& a, const VolumeGrid& b) {
    if (a.dims != b.dims || a.bbox.min != b.bbox.min || a.bbox.max != b.bbox.max)
        throw InvalidInput("volume metrics: grids differ in dims or bbox");
}

}  // namespace

double directed_error_deg(const Rgb& a, const Rgb& b) {
    const Vec2 u = unit_direction(a), v = unit_direction(b);
    return std::atan2(std::abs(u.x() * v.y() - u.y() * v.x()), u.dot(v)) * 180.0 / std::numbers::pi;
}

double undirected_error_deg(const Rgb& a, const Rgb& b) {
    const double t = directed_error_deg(a, b);
    return std::min(t, 180.0 - t);
}

MeanOverPixels hair_sale(const StrandMap& rendered, const StrandMap& groundTruth) {
    auto r = mean_over_intersection(rendered, groundTruth, directed_error_deg);
    assert(!r.value || (*r.value >= 0.0 && *r.value <= 180.0));
    return r;
}

MeanOverPixels hair_sale_undirected(const StrandMap& rendered, const StrandMap& groundTruth) {
    auto r = mean_over_intersection(rendered, groundTruth, undirected_error_deg);
    assert(!r.value || (*r.value >= 0.0 && *r.value <= 90.0));
    return r;
}

MeanOverPixels hair_rida(const DepthMap& rendered, const std::vector<PairLabel>& pairs, const Mask& region) {
    require_same_shape(rendered.values, region, "hair_rida");
    double sum = 0.0;
    std::size_t q = 0;
    for (const auto& p : pairs) {
        require_label(p);
        if (!region.contains(p.p1) || !region.contains(p.p2) || !region[p.p1] || !region[p.p2]) continue;
        const double diff = rendered.values[p.p1] - rendered.values[p.p2];
        const int sign = (diff > 0.0) - (diff < 0.0);
        sum += std::max(0, p.r * sign);
        ++q;
    }
    if (q == 0) return {std::nullopt, 0};
    return {sum / static_cast<double>(q), q};
}

std::optional<double> occupancy_precision(const VolumeGrid& pred, const VolumeGrid& gt, double threshold) {
    require_same_volume(pred, gt);
    std::size_t predOcc = 0, both = 0;
    for (std::size_t i = 0; i < pred.voxel_count(); ++i) {
        if (!pred.occupied(i, threshold)) continue;
        ++predOcc;
        both += gt.occupied(i, threshold);
    }
    if (predOcc == 0) return std::nullopt;
    return static_cast<double>(both) / static_cast<double>(predOcc);
}

std::optional<double> orientation_l2(const VolumeGrid& pred, const VolumeGrid& gt, double threshold) {
    require_same_volume(pred, gt);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < gt.voxel_count(); ++i) {
        if (!gt.occupied(i, threshold)) continue;
        sum += (pred.orientation[i].cast<double>() - gt.orientation[i].cast<double>()).norm();
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::optional<double> l_strand_l1(const StrandMap& pred, const StrandMap& gt) {
    require_same_shape(pred, gt, "l_strand_l1");
    double sum = 0.0;
    std::size_t maskCount = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        maskCount += on_mask(gt.at_index(i));
        for (std::size_t c = 0; c < 3; ++c) sum += std::abs(pred.at_index(i)[c] - gt.at_index(i)[c]);
    }
    if (maskCount == 0) return std::nullopt;
    return sum / (3.0 * static_cast<double>(maskCount));
}

double l_rank(const DepthMap& depth, const std::vector<PairLabel>& pairs, const LossConfig& cfg) {
    if (pairs.empty()) throw InvalidInput("l_rank: no pairs");
    if (!(cfg.epsilon > 0.0)) throw InvalidInput("l_rank: epsilon must be positive");
    double sum = 0.0;
    for (const auto& p : pairs) {
        require_label(p);
        if (!depth.values.contains(p.p1) || !depth.values.contains(p.p2)) throw InvalidInput("l_rank: pair outside image");
        sum += std::max(0.0, -(depth.values[p.p1] - depth.values[p.p2]) * p.r + cfg.epsilon);
    }
    return sum / static_cast<double>(pairs.size());
}

double l_depth(const DepthMap& depth, const DepthMap& pseudo, const std::vector<PairLabel>& pairs, const LossConfig& cfg) {
    require_same_shape(depth.values, pseudo.values, "l_depth");
    if (depth.valid != pseudo.valid) throw InvalidInput("l_depth: depth and pseudo-label masks differ");
    if (!(cfg.beta >= 0.0)) throw InvalidInput("l_depth: beta must be >= 0");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < depth.valid.size(); ++i) {
        if (!depth.valid.at_index(i)) continue;
        sum += std::abs(depth.values.at_index(i) - pseudo.values.at_index(i));
        ++n;
    }
    if (n == 0) throw InvalidInput("l_depth: empty depth mask");
    return cfg.beta * sum / static_cast<double>(n) + l_rank(depth, pairs, cfg);
}

MetricReport evaluate_image(const StrandMap& pred, const StrandMap& gt, const DepthMap* predDepth,
                            const std::vector<PairLabel>& pairs) {
    require_same_shape(pred, gt, "evaluate_image");
    MetricReport report;
    const auto sale = hair_sale(pred, gt);
    report.hairSale = sale.value;
    report.pixelCount = sale.count;
    report.hairSaleUndirected = hair_sale_undirected(pred, gt).value;

    Mask a(pred.width(), pred.height(), 0), b(gt.width(), gt.height(), 0), region(gt.width(), gt.height(), 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        a.at_index(i) = on_mask(pred.at_index(i));
        b.at_index(i) = on_mask(gt.at_index(i));
        region.at_index(i) = a.at_index(i) && b.at_index(i);
    }
    report.iou = compute_iou(a, b);
    if (predDepth && !pairs.empty()) {
        require_same_shape(predDepth->values, pred, "evaluate_image depth");
        const auto rida = hair_rida(*predDepth, pairs, region);
        report.hairRida = rida.value;
        report.pairCount = rida.count;
    }
    return report;
}

}  // namespace hairstep
