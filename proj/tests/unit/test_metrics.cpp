#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

#include "hairstep/metrics.hpp"

using namespace hairstep;
namespace ht = hairstep::testing;

namespace {

StrandMap uniform_map(int w, int h, const Vec2& d) { return StrandMap(w, h, ht::encode_pixel(d)); }

DepthMap depth_of(std::initializer_list<double> values) {
    DepthMap d{Grid<double>(static_cast<int>(values.size()), 1, 0.0), Mask(static_cast<int>(values.size()), 1, 1), 1, 2};
    int i = 0;
    for (double v : values) d.values(i++, 0) = v;
    return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// HairSale
// ---------------------------------------------------------------------------

TEST(HairSale, IdenticalIsZero) {
    Rng rng(1);
    const auto m = ht::random_strand_map(20, 20, rng);
    EXPECT_EQ(*hair_sale(m, m).value, 0.0);
}

TEST(HairSale, OppositeIs180) {
    EXPECT_NEAR(*hair_sale(uniform_map(5, 5, {1, 0}), uniform_map(5, 5, {-1, 0})).value, 180.0, 1e-9);
}

TEST(HairSale, EmptyIntersectionIsUndefined) {
    StrandMap a(4, 4, kBackground), b(4, 4, kBackground);
    a(0, 0) = ht::encode_pixel({1, 0});
    b(1, 1) = ht::encode_pixel({1, 0});
    const auto r = hair_sale(a, b);
    EXPECT_FALSE(r.value.has_value());
    EXPECT_EQ(r.count, 0u);
}

TEST(HairSale, MatchesScalarLoop) {
    Rng rng(2);
    for (int k = 0; k < 50; ++k) {
        const auto a = ht::random_strand_map(31, 23, rng), b = ht::random_strand_map(31, 23, rng);
        EXPECT_NEAR(*hair_sale(a, b).value, *oracle::hair_sale(a, b, false), 1e-9);
    }
}

TEST(HairSale, DimensionMismatchThrows) {
    EXPECT_THROW(hair_sale(StrandMap(2, 2), StrandMap(3, 2)), InvalidInput);
}

TEST(HairSaleUndirected, TrivialCases) {
    EXPECT_NEAR(*hair_sale_undirected(uniform_map(3, 3, {1, 0}), uniform_map(3, 3, {-1, 0})).value, 0.0, 1e-9);
    EXPECT_NEAR(*hair_sale_undirected(uniform_map(3, 3, {1, 0}), uniform_map(3, 3, {0, 1})).value, 90.0, 1e-9);
}

TEST(HairSaleUndirected, MatchesScalarLoopAndBoundedByDirected) {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        const auto a = ht::random_strand_map(17, 19, rng), b = ht::random_strand_map(17, 19, rng);
        EXPECT_NEAR(*hair_sale_undirected(a, b).value, *oracle::hair_sale(a, b, true), 1e-9);
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!on_mask(a.at_index(i)) || !on_mask(b.at_index(i))) continue;
            EXPECT_LE(undirected_error_deg(a.at_index(i), b.at_index(i)), directed_error_deg(a.at_index(i), b.at_index(i)));
        }
    }
}

// ---------------------------------------------------------------------------
// HairRida
// ---------------------------------------------------------------------------

TEST(HairRida, ConsistentIsOne) {
    const auto d = depth_of({0.9, 0.1, 0.5});
    const Mask region(3, 1, 1);
    const std::vector<PairLabel> pairs{{{0, 0}, {1, 0}, 1}, {{1, 0}, {2, 0}, -1}, {{2, 0}, {0, 0}, -1}};
    EXPECT_EQ(*hair_rida(d, pairs, region).value, 1.0);
}

TEST(HairRida, EqualDepthsScoreZero) {
    const auto d = depth_of({0.5, 0.5, 0.5});
    const std::vector<PairLabel> pairs{{{0, 0}, {1, 0}, 1}, {{1, 0}, {2, 0}, -1}};
    EXPECT_EQ(*hair_rida(d, pairs, Mask(3, 1, 1)).value, 0.0);
}

TEST(HairRida, OutsideRegionDropped) {
    const auto d = depth_of({0.9, 0.1, 0.5});
    Mask region(3, 1, 1);
    region(2, 0) = 0;
    const auto r = hair_rida(d, {{{0, 0}, {1, 0}, 1}, {{0, 0}, {2, 0}, 1}}, region);
    EXPECT_EQ(r.count, 1u);
    EXPECT_FALSE(hair_rida(d, {{{0, 0}, {2, 0}, 1}}, region).value.has_value());
}

TEST(HairRida, MatchesScalarLoopExactly) {
    Rng rng(4);
    for (int k = 0; k < 1000; ++k) {
        auto d = ht::random_depth(12, 9, rng);
        // Some exact ties.
        for (int t = 0; t < 5; ++t) d.values.at_index(rng.index(d.values.size())) = 0.5;
        const Mask region = ht::random_mask(12, 9, rng, 0.8);
        const auto pairs = ht::random_pairs(12, 9, rng, 30);
        const auto got = hair_rida(d, pairs, region).value, want = oracle::hair_rida(d, pairs, region);
        ASSERT_EQ(got.has_value(), want.has_value());
        if (got) { EXPECT_EQ(*got, *want); }
    }
}

TEST(HairRida, RejectsBadLabels) {
    const auto d = depth_of({0.9, 0.1});
    EXPECT_THROW(hair_rida(d, {{{0, 0}, {1, 0}, 0}}, Mask(2, 1, 1)), InvalidInput);
    EXPECT_THROW(hair_rida(d, {{{0, 0}, {0, 0}, 1}}, Mask(2, 1, 1)), InvalidInput);
}

// ---------------------------------------------------------------------------
// Volume metrics
// ---------------------------------------------------------------------------

TEST(VolumeMetrics, IdenticalGrids) {
    Rng rng(5);
    const auto g = ht::random_volume({6, 5, 4}, rng);
    EXPECT_EQ(*occupancy_precision(g, g), 1.0);
    EXPECT_EQ(*orientation_l2(g, g), 0.0);
}

TEST(VolumeMetrics, DisjointExtraHalvesPrecision) {
    VolumeGrid gt({4, 1, 1}, Box3{}), pred({4, 1, 1}, Box3{});
    gt.occupancy = {1, 1, 0, 0};
    pred.occupancy = {1, 1, 1, 1};
    for (int i = 0; i < 2; ++i) gt.orientation[static_cast<std::size_t>(i)] = Vec3f(1, 0, 0);
    for (auto& o : pred.orientation) o = Vec3f(1, 0, 0);
    EXPECT_EQ(*occupancy_precision(pred, gt), 0.5);
}

TEST(VolumeMetrics, MatchScalarLoops) {
    Rng rng(6);
    for (int k = 0; k < 100; ++k) {
        const auto a = ht::random_volume({5, 6, 4}, rng, 0.3), b = ht::random_volume({5, 6, 4}, rng, 0.5);
        EXPECT_EQ(occupancy_precision(a, b), oracle::precision(a, b));
        const auto l2 = orientation_l2(a, b), want = oracle::orientation_l2(a, b);
        ASSERT_EQ(l2.has_value(), want.has_value());
        if (l2) { EXPECT_NEAR(*l2, *want, 1e-12); }
    }
}

TEST(VolumeMetrics, ShapeMismatchThrows) {
    EXPECT_THROW(occupancy_precision(VolumeGrid({2, 2, 2}, Box3{}), VolumeGrid({2, 2, 3}, Box3{})), InvalidInput);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

TEST(StrandL1, Trivials) {
    Rng rng(7);
    const auto m = ht::random_strand_map(8, 8, rng);
    EXPECT_EQ(*l_strand_l1(m, m), 0.0);
    StrandMap gt(1, 1, Rgb{1.0, 0.5, 0.5}), pred(1, 1, Rgb{0.7, 0.5, 0.5});
    EXPECT_NEAR(*l_strand_l1(pred, gt), 0.1, 1e-15);
    EXPECT_FALSE(l_strand_l1(gt, StrandMap(1, 1, kBackground)).has_value());
}

TEST(StrandL1, MatchesScalarLoop) {
    Rng rng(8);
    for (int k = 0; k < 100; ++k) {
        const auto a = ht::random_strand_map(13, 11, rng), b = ht::random_strand_map(13, 11, rng);
        EXPECT_NEAR(*l_strand_l1(a, b), *oracle::strand_l1(a, b), 1e-9);
    }
}

TEST(Rank, SpotValues) {
    const LossConfig cfg;
    ASSERT_EQ(cfg.epsilon, 0.05);
    // D(p1) - D(p2) = 0.10, r = +1: margin satisfied.
    EXPECT_EQ(l_rank(depth_of({0.15, 0.05}), {{{0, 0}, {1, 0}, 1}}, cfg), 0.0);
    // D(p1) - D(p2) = 0.01, r = +1.
    EXPECT_EQ(l_rank(depth_of({0.01, 0.0}), {{{0, 0}, {1, 0}, 1}}, cfg), 0.04);
    // D(p1) - D(p2) = 0.10, r = -1.
    EXPECT_EQ(l_rank(depth_of({0.15, 0.05}), {{{0, 0}, {1, 0}, -1}}, cfg), 0.15);
}

TEST(Rank, MatchesScalarLoop) {
    Rng rng(9);
    for (int k = 0; k < 100; ++k) {
        const auto d = ht::random_depth(10, 10, rng);
        const auto pairs = ht::random_pairs(10, 10, rng, 40);
        EXPECT_NEAR(l_rank(d, pairs), oracle::rank(d, pairs, 0.05), 1e-9);
    }
}

TEST(Rank, RejectsEmptyAndBad) {
    const auto d = depth_of({0.1, 0.2});
    EXPECT_THROW(l_rank(d, {}), InvalidInput);
    LossConfig cfg;
    cfg.epsilon = 0.0;
    EXPECT_THROW(l_rank(d, {{{0, 0}, {1, 0}, 1}}, cfg), InvalidInput);
    EXPECT_THROW(l_rank(d, {{{0, 0}, {5, 0}, 1}}), InvalidInput);
}

TEST(Depth, Decomposition) {
    const auto d = depth_of({0.9, 0.1});
    EXPECT_EQ(l_depth(d, d, {{{0, 0}, {1, 0}, 1}}), 0.0);
    const auto flat = depth_of({0.5, 0.5});
    EXPECT_EQ(l_depth(flat, flat, {{{0, 0}, {1, 0}, 1}}), 0.05);
}

TEST(Depth, MatchesSumOfTerms) {
    Rng rng(10);
    for (int k = 0; k < 100; ++k) {
        auto d = ht::random_depth(9, 8, rng);
        auto pseudo = d;
        for (auto& v : pseudo.values.data()) v = rng.uniform();
        const auto pairs = ht::random_pairs(9, 8, rng, 25);
        const double want = 0.1 * oracle::depth_l1_term(d, pseudo) + oracle::rank(d, pairs, 0.05);
        EXPECT_NEAR(l_depth(d, pseudo, pairs), want, 1e-9);
    }
}

TEST(Depth, MaskMismatchThrows) {
    auto a = depth_of({0.1, 0.2});
    auto b = a;
    b.valid(0, 0) = 0;
    EXPECT_THROW(l_depth(a, b, {{{0, 0}, {1, 0}, 1}}), InvalidInput);
}

// ---------------------------------------------------------------------------
// evaluate_image
// ---------------------------------------------------------------------------

TEST(Evaluate, PerfectPrediction) {
    Rng rng(11);
    const auto gt = ht::random_strand_map(16, 16, rng, 0.6);
    DepthMap depth{Grid<double>(16, 16, 0.0), Mask(16, 16, 0), 1, 2};
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            depth.valid(x, y) = on_mask(gt(x, y));
            depth.values(x, y) = (x + 16 * y) / 256.0;
        }
    std::vector<PairLabel> pairs;
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x + 1 < 16; ++x)
            if (on_mask(gt(x, y)) && on_mask(gt(x + 1, y))) pairs.push_back({{x + 1, y}, {x, y}, 1});
    const auto r = evaluate_image(gt, gt, &depth, pairs);
    EXPECT_EQ(*r.hairSale, 0.0);
    EXPECT_EQ(*r.hairRida, 1.0);
    EXPECT_EQ(r.iou, 1.0);
    EXPECT_EQ(r.pairCount, pairs.size());
}
