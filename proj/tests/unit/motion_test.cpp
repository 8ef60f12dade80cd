#include "support.hpp"

#include <afsmr/motion.hpp>

#include <gtest/gtest.h>

namespace {

using namespace afsmr;

GrayFrame shifted(const GrayFrame& src, int sx, int sy)
{
    // out(m, n) = src(m - sx, n - sy), border replicated: content moves by (sx, sy).
    GrayFrame out(src.width(), src.height());
    for (int n = 0; n < src.height(); ++n)
        for (int m = 0; m < src.width(); ++m)
            out(m, n) = src(std::clamp(m - sx, 0, src.width() - 1), std::clamp(n - sy, 0, src.height() - 1));
    return out;
}

TEST(MotionCompensation, HalvesTheDisplacement)
{
    GrayFrame prev(3, 2, std::vector<double>{1, 2, 3, 4, 5, 6});
    MotionField flow(3, 2, {2, 0, -1, 4, 0.5, 0}, {0, 2, 0, -3, 1, 0});
    const auto mesh = motion_compensate_forward(prev, flow);
    ASSERT_EQ(mesh.size(), 6u);
    EXPECT_EQ(mesh.xs, (std::vector<double>{1.0, 1.0, 1.5, 2.0, 1.25, 2.0}));
    EXPECT_EQ(mesh.ys, (std::vector<double>{0.0, 1.0, 0.0, -0.5, 1.5, 1.0}));
    EXPECT_EQ(mesh.vals, prev.values());
}

TEST(MotionCompensation, ZeroFlowGivesTheGrid)
{
    const auto prev = afsmr::testing::smooth_frame(9, 5);
    const auto mesh = motion_compensate_forward(prev, MotionField(9, 5));
    const auto grid = grid_mesh(prev);
    EXPECT_EQ(mesh.xs, grid.xs);
    EXPECT_EQ(mesh.ys, grid.ys);
    EXPECT_EQ(mesh.vals, grid.vals);
}

TEST(MotionCompensation, RejectsMismatchAndBadPosition)
{
    EXPECT_THROW(motion_compensate_forward(GrayFrame(4, 4), MotionField(4, 3)), std::invalid_argument);
    EXPECT_THROW(motion_compensate_forward(GrayFrame(4, 4), MotionField(4, 4), 1.0), std::invalid_argument);
}

TEST(SyntheticFlow, TranslationAndAffine)
{
    const auto t = synthesize_flow(GlobalTranslation{1.5, -2.0}, 4, 3);
    for (int n = 0; n < 3; ++n)
        for (int m = 0; m < 4; ++m) {
            EXPECT_EQ(t.dm(m, n), 1.5);
            EXPECT_EQ(t.dn(m, n), -2.0);
        }
    // 10 % zoom about the origin plus a shift.
    const auto a = synthesize_flow(AffineMotion{1.1, 0.0, 0.0, 1.1, 2.0, -1.0}, 5, 5);
    EXPECT_NEAR(a.dm(4, 3), 0.1 * 4 + 2.0, 1e-12);
    EXPECT_NEAR(a.dn(4, 3), 0.1 * 3 - 1.0, 1e-12);
    const auto identity = synthesize_flow(AffineMotion{}, 3, 3);
    for (double v : identity.dm())
        EXPECT_EQ(v, 0.0);
}

TEST(BlockMatching, RecoversGlobalShift)
{
    const auto prev = afsmr::testing::smooth_frame(48, 40);
    const auto next = shifted(prev, 3, -2);
    const auto flow = estimate_block_matching(prev, next, BlockMatchConfig{8, 4, 1});
    // Interior blocks see the exact shift; border blocks may see replicated pixels.
    for (int n = 8; n < 32; ++n)
        for (int m = 8; m < 40; ++m) {
            EXPECT_EQ(flow.dm(m, n), 3.0) << m << "," << n;
            EXPECT_EQ(flow.dn(m, n), -2.0) << m << "," << n;
        }
}

TEST(BlockMatching, FlatFramesPreferZeroMotion)
{
    const GrayFrame flat(16, 16, 50.0);
    const auto flow = estimate_block_matching(flat, flat, BlockMatchConfig{4, 3, 1});
    for (double v : flow.dm())
        EXPECT_EQ(v, 0.0);
    for (double v : flow.dn())
        EXPECT_EQ(v, 0.0);
}

TEST(BlockMatching, ThreadCountDoesNotChangeResult)
{
    std::mt19937_64 rng(5);
    const auto prev = afsmr::testing::random_frame(40, 24, rng);
    const auto next = shifted(prev, -1, 2);
    const auto a = estimate_block_matching(prev, next, BlockMatchConfig{8, 3, 1});
    const auto b = estimate_block_matching(prev, next, BlockMatchConfig{8, 3, 4});
    EXPECT_EQ(a.dm(), b.dm());
    EXPECT_EQ(a.dn(), b.dn());
}

TEST(BlockMatching, PartialBlocksAtTheBorderAreCovered)
{
    const auto prev = afsmr::testing::smooth_frame(21, 13);
    const auto next = shifted(prev, 1, 1);
    const auto flow = estimate_block_matching(prev, next, BlockMatchConfig{8, 2, 1});
    EXPECT_EQ(flow.width(), 21);
    EXPECT_EQ(flow.height(), 13);
    EXPECT_EQ(flow.dm(20, 12), flow.dm(16, 8));
}

}  // namespace
