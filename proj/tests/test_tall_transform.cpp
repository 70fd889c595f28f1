/*
 Copyright 2026 The tall Authors
 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tall/tall_transform.hpp"

using namespace tall;

namespace {

Clip constant_clip(std::initializer_list<float> values, std::size_t side, std::size_t channels = 3)
{
    std::vector<Frame> frames;
    for (float v : values) {
        frames.emplace_back(channels, side, side, v);
    }
    return Clip(std::move(frames));
}

Clip random_clip(std::mt19937& gen, std::size_t t, std::size_t c, std::size_t h, std::size_t w)
{
    std::uniform_real_distribution<float> dist(0.01f, 1.0f);
    std::vector<Frame> frames;
    for (std::size_t i = 0; i < t; ++i) {
        Frame f(c, h, w);
        for (auto& v : f.data()) v = dist(gen);
        frames.push_back(std::move(f));
    }
    return Clip(std::move(frames));
}

} // namespace

TEST(Clip, RequiresMatchingFrames)
{
    EXPECT_THROW(Clip(std::vector<Frame>{}), std::invalid_argument);
    EXPECT_THROW(Clip(std::vector<Frame>{Frame(3, 4, 4), Frame(3, 4, 5)}), std::invalid_argument);
}

TEST(Mask, EffectiveRectFollowsClipArithmetic)
{
    MaskSpec m{112, 112, 56, true};
    EXPECT_EQ(m.effective_rect(224, 224), (Rect{84, 84, 140, 140}));
    m.center_row = 0;
    m.center_col = 0;
    EXPECT_EQ(m.effective_rect(224, 224), (Rect{0, 0, 28, 28}));
    m.center_row = 223;
    m.center_col = 200;
    EXPECT_EQ(m.effective_rect(224, 224), (Rect{195, 172, 224, 224}));
    // odd size: floor(s/2) on each side
    MaskSpec odd{10, 10, 7, true};
    EXPECT_EQ(odd.effective_rect(224, 224), (Rect{7, 7, 13, 13}));
}

TEST(Mask, SizeZeroIsNoOp)
{
    RandomStream s(1);
    const MaskSpec m = draw_mask(224, 224, 0, s);
    EXPECT_TRUE(m.effective_rect(224, 224).empty());
    const Clip clip = constant_clip({0.3f, 0.4f}, 224);
    EXPECT_EQ(apply_mask(clip, m), clip);
}

TEST(Mask, DrawIsUniformOverFrame)
{
    RandomStream s(77);
    std::size_t max_h = 0, max_w = 0;
    for (int i = 0; i < 2000; ++i) {
        const MaskSpec m = draw_mask(30, 20, 8, s);
        ASSERT_LT(m.center_row, 30u);
        ASSERT_LT(m.center_col, 20u);
        max_h = std::max(max_h, m.center_row);
        max_w = std::max(max_w, m.center_col);
    }
    EXPECT_EQ(max_h, 29u);
    EXPECT_EQ(max_w, 19u);
}

TEST(Mask, DisabledMaskIsIdentity)
{
    std::mt19937 gen(4);
    const Clip clip = random_clip(gen, 4, 3, 32, 32);
    EXPECT_EQ(apply_mask(clip, MaskSpec{}), clip);
}

TEST(Mask, ZeroesSameRectInEveryFrame)
{
    const Clip clip = constant_clip({1.0f, 1.0f, 1.0f, 1.0f}, 224);
    const Clip masked = apply_mask(clip, MaskSpec{112, 112, 56, true});
    for (const auto& f : masked.frames()) {
        for (std::size_t c = 0; c < 3; ++c) {
            std::size_t zeros = 0;
            for (std::size_t r = 0; r < 224; ++r) {
                for (std::size_t col = 0; col < 224; ++col) {
                    const bool inside = r >= 84 && r < 140 && col >= 84 && col < 140;
                    ASSERT_EQ(f.at(c, r, col), inside ? 0.0f : 1.0f);
                    zeros += inside;
                }
            }
            EXPECT_EQ(zeros, 56u * 56u);
        }
    }
}

TEST(Mask, CenterOutsideClipRejected)
{
    const Clip clip = constant_clip({1.0f}, 16);
    EXPECT_THROW(apply_mask(clip, MaskSpec{16, 0, 4, true}), std::invalid_argument);
}

TEST(Mask, IndependentClipStreamsDiffer)
{
    int same = 0;
    for (std::uint64_t clip = 0; clip < 200; ++clip) {
        auto a = substream(RandomStream::for_clip(1, "vid", clip), StreamPurpose::Mask);
        auto b = substream(RandomStream::for_clip(1, "vid", clip + 1000), StreamPurpose::Mask);
        same += draw_mask(224, 224, 56, a) == draw_mask(224, 224, 56, b);
    }
    EXPECT_LE(same, 1);
}

TEST(Layout, CatalogContents)
{
    const auto catalog = layout_catalog();
    ASSERT_GE(catalog.size(), 4u);
    for (const auto& l : catalog) {
        EXPECT_NO_THROW(l.validate());
        EXPECT_EQ(l.slots.size(), 4u) << l.name;
    }
    const auto compact = find_layout("compact_2x2");
    EXPECT_EQ(compact.slots, (std::vector<Cell>{{0, 0}, {0, 1}, {1, 0}, {1, 1}}));
    EXPECT_THROW(find_layout("nope"), std::invalid_argument);
}

TEST(Layout, ValidationCatchesBadSlots)
{
    EXPECT_THROW((LayoutSpec{"x", 2, 2, {{0, 0}, {0, 0}}, 0}.validate()), std::invalid_argument);
    EXPECT_THROW((LayoutSpec{"x", 2, 2, {{0, 2}}, 0}.validate()), std::invalid_argument);
    EXPECT_THROW((LayoutSpec{"x", 0, 2, {{0, 0}}, 0}.validate()), std::invalid_argument);
}

TEST(Layout, Compactness)
{
    const double compact = layout_compactness(find_layout("compact_2x2"), 112, 112);
    EXPECT_NEAR(compact, std::sqrt(112.0 * 112 * 2), 1e-9);
    EXPECT_NEAR(compact, 158.39, 5e-3);
    EXPECT_DOUBLE_EQ(layout_compactness(find_layout("strip_1x4"), 112, 112), 336.0);
    EXPECT_DOUBLE_EQ(layout_compactness(find_layout("strip_4x1"), 112, 112), 336.0);
    EXPECT_NEAR(layout_compactness(find_layout("diag_4x4"), 112, 112), 3 * std::sqrt(2.0) * 112, 1e-9);
    EXPECT_THROW(layout_compactness(LayoutSpec{"one", 1, 1, {{0, 0}}, 0}, 1, 1), std::invalid_argument);
}

TEST(Order, SlotSources)
{
    using V = std::vector<std::optional<std::size_t>>;
    EXPECT_EQ(slot_sources(ForwardOrder{}, 4), (V{0, 1, 2, 3}));
    EXPECT_EQ(slot_sources(ReverseOrder{}, 4), (V{3, 2, 1, 0}));
    EXPECT_EQ(slot_sources(AbsenceOrder{2}, 4), (V{0, 1, std::nullopt, std::nullopt}));
    EXPECT_THROW(slot_sources(AbsenceOrder{0}, 4), std::invalid_argument);
    EXPECT_THROW(slot_sources(AbsenceOrder{5}, 4), std::invalid_argument);

    const auto shuffled = slot_sources(RandomOrder{17}, 4);
    EXPECT_EQ(shuffled, slot_sources(RandomOrder{17}, 4));
    std::set<std::size_t> seen;
    for (const auto& s : shuffled) seen.insert(*s);
    EXPECT_EQ(seen.size(), 4u);

    std::set<V> distinct;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        distinct.insert(slot_sources(RandomOrder{seed}, 4));
    }
    EXPECT_EQ(distinct.size(), 24u);
}

TEST(Arrange, ConstantQuadrantsMatchOracle)
{
    const float v[4] = {10 / 255.0f, 20 / 255.0f, 30 / 255.0f, 40 / 255.0f};
    const Clip clip = constant_clip({v[0], v[1], v[2], v[3]}, 224, 1);

    // Oracle: hand-built 448x448 canvas through the direct bilinear formula.
    std::vector<double> canvas(448 * 448);
    for (int r = 0; r < 448; ++r)
        for (int c = 0; c < 448; ++c)
            canvas[r * 448 + c] = v[(r / 224) * 2 + c / 224];
    const auto expected = oracle::bilinear(canvas, 448, 448, 224, 224);
    for (int r = 0; r < 224; ++r)
        for (int c = 0; c < 224; ++c)
            ASSERT_EQ(expected[r * 224 + c], static_cast<double>(v[(r / 112) * 2 + c / 112]));

    const Thumbnail t = arrange(clip, find_layout("compact_2x2"), ForwardOrder{}, 224);
    ASSERT_EQ(t.image.height(), 224u);
    for (std::size_t r = 0; r < 224; ++r)
        for (std::size_t c = 0; c < 224; ++c)
            ASSERT_EQ(t.image.at(0, r, c), static_cast<float>(expected[r * 224 + c]));

    const Thumbnail rev = arrange(clip, find_layout("compact_2x2"), ReverseOrder{}, 224);
    EXPECT_EQ(rev.image.at(0, 0, 0), v[3]);
    EXPECT_EQ(rev.image.at(0, 0, 223), v[2]);
    EXPECT_EQ(rev.image.at(0, 223, 0), v[1]);
    EXPECT_EQ(rev.image.at(0, 223, 223), v[0]);
}

TEST(Arrange, SingleFrameThumbSizedIsIdentity)
{
    std::mt19937 gen(8);
    const Clip clip = random_clip(gen, 1, 3, 224, 224);
    const Thumbnail t = arrange(clip, LayoutSpec{"one", 1, 1, {{0, 0}}, 0}, ForwardOrder{}, 224);
    EXPECT_EQ(t.image, clip[0]);
}

TEST(Arrange, SlotCountMismatchRejected)
{
    const Clip clip = constant_clip({0.1f, 0.2f, 0.3f, 0.4f}, 8);
    const LayoutSpec three{"three", 2, 2, {{0, 0}, {0, 1}, {1, 0}}, 0};
    EXPECT_THROW(arrange(clip, three, ForwardOrder{}, 8), std::invalid_argument);
}

TEST(Arrange, DisassemblyRoundTrip)
{
    std::mt19937 gen(21);
    std::uniform_int_distribution<std::size_t> dim(1, 24);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t side = dim(gen);
        const Clip clip = random_clip(gen, 4, 3, side, side);
        const auto layout = find_layout("compact_2x2");
        const Thumbnail t = arrange(clip, layout, ForwardOrder{}, 2 * side);
        for (std::size_t s = 0; s < 4; ++s) {
            ASSERT_EQ(slice_cell(t.image, layout.slots[s], side, side), clip[s]);
        }
    }
}

TEST(Arrange, ProvenanceUnderOrders)
{
    const Clip clip = constant_clip({0.1f, 0.2f, 0.3f, 0.4f}, 8);
    const auto layout = find_layout("compact_2x2");
    const auto fwd = arrange(clip, layout, ForwardOrder{}, 16);
    auto rev = arrange(clip, layout, ReverseOrder{}, 16);
    auto reversed = fwd.provenance_grid;
    std::reverse(reversed.begin(), reversed.end());
    EXPECT_EQ(rev.provenance_grid, reversed);

    for (std::size_t k = 1; k <= 4; ++k) {
        const auto abs = arrange(clip, layout, AbsenceOrder{k}, 16);
        const auto absent = std::count(abs.provenance_grid.begin(), abs.provenance_grid.end(), std::nullopt);
        EXPECT_EQ(static_cast<std::size_t>(absent), 4 - k);
        for (std::size_t s = k; s < 4; ++s) {
            const Frame cell = slice_cell(abs.image, layout.slots[s], 8, 8);
            for (float v : cell.data()) ASSERT_EQ(v, layout.fill_missing);
        }
    }
}

TEST(Arrange, UnusedCellsHoldFill)
{
    const Clip clip = constant_clip({0.5f, 0.5f, 0.5f, 0.5f}, 4);
    auto layout = find_layout("diag_4x4");
    layout.fill_missing = 0.25f;
    const Canvas canvas = assemble_canvas(clip, layout, ForwardOrder{});
    EXPECT_EQ(canvas.image.height(), 16u);
    EXPECT_EQ(canvas.image.at(0, 0, 15), 0.25f);
    EXPECT_EQ(canvas.image.at(0, 5, 5), 0.5f);
    const auto used = std::count_if(canvas.provenance_grid.begin(), canvas.provenance_grid.end(),
                                    [](const auto& s) { return s.has_value(); });
    EXPECT_EQ(used, 4);
}

TEST(Arrange, DeterministicForRandomOrder)
{
    std::mt19937 gen(31);
    const Clip clip = random_clip(gen, 4, 3, 12, 12);
    const auto layout = find_layout("strip_1x4");
    const auto a = arrange(clip, layout, RandomOrder{5}, 24);
    const auto b = arrange(clip, layout, RandomOrder{5}, 24);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.slot_sources, b.slot_sources);
}

TEST(Arrange, CellDecimationMatchesCanvasResize)
{
    std::mt19937 gen(47);
    for (const auto& base : layout_catalog()) {
        for (std::size_t side : {8u, 16u, 24u}) {
            const std::size_t h = 2 * side / base.rows;
            const std::size_t w = 2 * side / base.cols;
            for (const OrderVariant& order :
                 {OrderVariant{ForwardOrder{}}, OrderVariant{ReverseOrder{}},
                  OrderVariant{RandomOrder{9}}, OrderVariant{AbsenceOrder{2}}}) {
                auto layout = base;
                layout.fill_missing = 0.375f;
                const Clip clip = random_clip(gen, 4, side == 16 ? 1 : 3, h, w);
                const Thumbnail fast = arrange(clip, layout, order, side);
                const Frame reference =
                    resize_bilinear(assemble_canvas(clip, layout, order).image, side, side);
                ASSERT_EQ(fast.image, reference) << layout.name << " side " << side << " "
                                                 << order_name(order);
            }
        }
    }
}
