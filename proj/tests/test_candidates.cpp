#include "s2c/candidates.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace s2c;
using namespace s2c::test;

TEST(GridAnchors, DefaultGridYieldsTargetCount) {
    const auto boxes = grid_anchors(640, 480, AnchorGrid{});
    EXPECT_EQ(boxes.size(), 90u);
    for (const auto& b : boxes) {
        EXPECT_GE(b.area(), 0.4 * 640 * 480 * (1 - 1e-9));
        EXPECT_GE(b.width(), 0.3 * 640 * (1 - 1e-9));
        EXPECT_GE(b.height(), 0.3 * 480 * (1 - 1e-9));
        EXPECT_GE(b.x1, 0.0);
        EXPECT_LE(b.x2, 640.0);
        EXPECT_GE(b.y1, 0.0);
        EXPECT_LE(b.y2, 480.0);
    }
}

TEST(GridAnchors, PoolMatchesBruteForceCount) {
    AnchorGrid g;
    std::size_t expected = 0;
    const double w = 640, h = 480;
    for (int a = 0; a < 12; ++a)
        for (int b = a + 1; b < 12; ++b)
            for (int c = 0; c < 12; ++c)
                for (int d = c + 1; d < 12; ++d) {
                    const double fw = (b - a) / 11.0, fh = (d - c) / 11.0;
                    if (fw * fh >= 0.4 - 1e-12 && fw >= 0.3 - 1e-12 && fh >= 0.3 - 1e-12) ++expected;
                }
    EXPECT_EQ(grid_anchor_pool(w, h, g).size(), expected);
}

TEST(GridAnchors, FullAreaConstraintLeavesOnlyWholeImage) {
    AnchorGrid g;
    g.min_area_ratio = 1.0;
    const auto boxes = grid_anchors(320, 200, g);
    ASSERT_EQ(boxes.size(), 1u);
    EXPECT_EQ(boxes[0], make_box(0, 0, 320, 200));
}

TEST(GridAnchors, UnconstrainedFourBinsGivesThirtySix) {
    AnchorGrid g;
    g.bins = 4;
    g.min_area_ratio = 0;
    g.min_side_ratio = 0;
    g.target_count = 0;
    const auto boxes = grid_anchors(90, 60, g);
    EXPECT_EQ(boxes.size(), 36u);
    std::set<std::tuple<double, double, double, double>> unique;
    for (const auto& b : boxes) unique.insert({b.x1, b.y1, b.x2, b.y2});
    EXPECT_EQ(unique.size(), 36u);
}

TEST(GridAnchors, ImpossibleConstraintsFallBackAndReport) {
    AnchorGrid g;
    g.min_area_ratio = 1.5;
    bool unsat = false;
    const auto boxes = grid_anchors(100, 100, g, &unsat);
    EXPECT_TRUE(unsat);
    ASSERT_EQ(boxes.size(), 1u);
    EXPECT_EQ(boxes[0], make_box(0, 0, 100, 100));
}

TEST(GridAnchors, BadInputsAreRejected) {
    EXPECT_THROW(grid_anchors(0, 10, AnchorGrid{}), DataError);
    AnchorGrid g;
    g.bins = 1;
    EXPECT_THROW(grid_anchors(10, 10, g), ConfigError);
}

TEST(RatioAnchors, AllBoxesHaveRequestedRatioAndFit) {
    for (auto [rw, rh] : {std::pair{16, 9}, std::pair{1, 1}, std::pair{3, 4}}) {
        const auto boxes = ratio_anchors(640, 480, rw, rh, 5, 3);
        ASSERT_FALSE(boxes.empty());
        EXPECT_LE(boxes.size(), ratio_anchor_enumeration_count(5, 3));
        for (const auto& b : boxes) {
            EXPECT_NEAR(b.width() / b.height(), double(rw) / rh, kRatioTolerance * double(rw) / rh);
            EXPECT_GE(b.x1, -1e-9);
            EXPECT_GE(b.y1, -1e-9);
            EXPECT_LE(b.x2, 640 + 1e-9);
            EXPECT_LE(b.y2, 480 + 1e-9);
        }
    }
}

TEST(RatioAnchors, LargestBoxSpansLimitingAxis) {
    const auto boxes = ratio_anchors(640, 480, 16, 9, 3, 3);
    double widest = 0;
    for (const auto& b : boxes) widest = std::max(widest, b.width());
    EXPECT_NEAR(widest, 640.0, 1e-9);
}

TEST(RatioAnchors, InvalidRatioIsUsageError) {
    EXPECT_THROW(ratio_anchors(640, 480, 0, 9, 3, 3), UsageError);
    EXPECT_THROW(ratio_anchors(640, 480, 4, 3, 0, 3), UsageError);
}

TEST(CircularCrop, SquaresCircumscribeCircles) {
    const auto crops = circular_crop(640, 480, 4, 3);
    ASSERT_FALSE(crops.empty());
    for (const auto& [c, b] : crops) {
        EXPECT_NEAR(b.width(), 2 * c.radius, 1e-9);
        EXPECT_NEAR(b.height(), 2 * c.radius, 1e-9);
        EXPECT_NEAR(b.center_x(), c.cx, 1e-9);
        EXPECT_NEAR(b.center_y(), c.cy, 1e-9);
        EXPECT_LE(2 * c.radius, 480 + 1e-9);
        EXPECT_GE(2 * c.radius, 0.3 * 480 - 1e-9);
    }
}

TEST(RankCrops, OrdersByScoreWithStableTies) {
    const std::vector<double> scores = {0.2, 0.9, 0.5, 0.9};
    const auto ranked = rank_crops(scores);
    ASSERT_EQ(ranked.size(), 4u);
    EXPECT_EQ(ranked[1].rank, 1u);
    EXPECT_EQ(ranked[3].rank, 2u);
    EXPECT_EQ(ranked[2].rank, 3u);
    EXPECT_EQ(ranked[0].rank, 4u);
    const auto top = top_crops(ranked, 2);
    ASSERT_EQ(top.size(), 2u);
    EXPECT_EQ(top[0].index, 1u);
    EXPECT_EQ(top[1].index, 3u);
    EXPECT_EQ(top_crops(ranked, 10).size(), 4u);
}

TEST(RankCrops, NanIsNumericalError) {
    const std::vector<double> scores = {0.1, std::nan("")};
    EXPECT_THROW(rank_crops(scores), NumericalError);
}
