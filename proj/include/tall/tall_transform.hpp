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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pixel_core.hpp"
#include "rng.hpp"

namespace tall {

inline constexpr std::size_t kDefaultThumbSide = 224;
inline constexpr std::size_t kDefaultMaskSize = 56;

/// t consecutive frames of identical shape.
class Clip {
public:
    Clip() = default;
    explicit Clip(std::vector<Frame> frames) : frames_(std::move(frames))
    {
        if (frames_.empty()) {
            throw std::invalid_argument("clip must contain at least one frame");
        }
        for (const auto& f : frames_) {
            if (!f.same_shape(frames_.front())) {
                throw std::invalid_argument("clip frames must share C x H x W");
            }
        }
    }

    std::size_t size() const { return frames_.size(); }
    const Frame& operator[](std::size_t i) const { return frames_[i]; }
    const std::vector<Frame>& frames() const { return frames_; }
    std::vector<Frame> take_frames() && { return std::move(frames_); }
    std::size_t height() const { return frames_.front().height(); }
    std::size_t width() const { return frames_.front().width(); }
    std::size_t channels() const { return frames_.front().channels(); }

    friend bool operator==(const Clip&, const Clip&) = default;

private:
    std::vector<Frame> frames_;
};

// ---------------------------------------------------------------------------
// Fixed-position mask

struct MaskSpec {
    std::size_t center_row = 0;
    std::size_t center_col = 0;
    std::size_t size = 0;
    bool enabled = false;

    /// Zeroed region for an H x W frame: center -/+ floor(size/2), clipped.
    Rect effective_rect(std::size_t height, std::size_t width) const
    {
        if (!enabled) {
            return Rect{};
        }
        const auto half = static_cast<long long>(size / 2);
        const auto clip = [](long long v, std::size_t hi) {
            return static_cast<std::size_t>(std::clamp<long long>(v, 0, static_cast<long long>(hi)));
        };
        const auto h = static_cast<long long>(center_row);
        const auto w = static_cast<long long>(center_col);
        return Rect{clip(h - half, height), clip(w - half, width), clip(h + half, height),
                    clip(w + half, width)};
    }

    friend bool operator==(const MaskSpec&, const MaskSpec&) = default;
};

/// One mask per clip: center uniform over the frame, row drawn first.
inline MaskSpec draw_mask(std::size_t height, std::size_t width, std::size_t size,
                          RandomStream& stream)
{
    if (height == 0 || width == 0) {
        throw std::invalid_argument("draw_mask: frame dimensions must be positive");
    }
    MaskSpec m;
    m.center_row = static_cast<std::size_t>(stream.uniform(height));
    m.center_col = static_cast<std::size_t>(stream.uniform(width));
    m.size = size;
    m.enabled = true;
    return m;
}

/// Zeroes the same rectangle in every frame of the clip.
inline Clip apply_mask(Clip clip, const MaskSpec& mask)
{
    if (!mask.enabled) {
        return clip;
    }
    if (mask.center_row >= clip.height() || mask.center_col >= clip.width()) {
        throw std::invalid_argument("apply_mask: mask center outside clip dimensions");
    }
    const Rect rect = mask.effective_rect(clip.height(), clip.width());
    std::vector<Frame> frames = std::move(clip).take_frames();
    for (auto& f : frames) {
        for (std::size_t c = 0; c < f.channels(); ++c) {
            for (std::size_t r = rect.row0; r < rect.row1; ++r) {
                float* row = &f.at(c, r, 0);
                std::fill(row + rect.col0, row + rect.col1, 0.0f);
            }
        }
    }
    return Clip(std::move(frames));
}

// ---------------------------------------------------------------------------
// Layout

struct Cell {
    std::size_t row = 0;
    std::size_t col = 0;

    friend auto operator<=>(const Cell&, const Cell&) = default;
};

struct LayoutSpec {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Cell> slots; // one per sub-image, in frame order
    float fill_missing = 0.0f;

    void validate() const
    {
        if (rows == 0 || cols == 0) {
            throw std::invalid_argument("layout '" + name + "': grid must be at least 1x1");
        }
        if (slots.empty()) {
            throw std::invalid_argument("layout '" + name + "': no slots");
        }
        if (slots.size() > rows * cols) {
            throw std::invalid_argument("layout '" + name + "': more slots than grid cells");
        }
        std::set<Cell> seen;
        for (const auto& s : slots) {
            if (s.row >= rows || s.col >= cols) {
                throw std::invalid_argument("layout '" + name + "': slot outside grid");
            }
            if (!seen.insert(s).second) {
                throw std::invalid_argument("layout '" + name + "': duplicate slot");
            }
        }
    }
};

/// Layouts compared in the layout ablation. compact_2x2 is the default.
inline std::vector<LayoutSpec> layout_catalog()
{
    return {
        LayoutSpec{"compact_2x2", 2, 2, {{0, 0}, {0, 1}, {1, 0}, {1, 1}}, 0.0f},
        LayoutSpec{"strip_1x4", 1, 4, {{0, 0}, {0, 1}, {0, 2}, {0, 3}}, 0.0f},
        LayoutSpec{"strip_4x1", 4, 1, {{0, 0}, {1, 0}, {2, 0}, {3, 0}}, 0.0f},
        LayoutSpec{"diag_4x4", 4, 4, {{0, 0}, {1, 1}, {2, 2}, {3, 3}}, 0.0f},
    };
}

inline LayoutSpec find_layout(const std::string& name)
{
    for (auto& l : layout_catalog()) {
        if (l.name == name) {
            return l;
        }
    }
    throw std::invalid_argument("unknown layout '" + name + "'");
}

/// Square row-major grid of `count` sub-images, e.g. 3x3 for nine frames.
inline LayoutSpec square_layout(std::size_t count)
{
    const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
    if (count == 0 || side * side != count) {
        throw std::invalid_argument("square_layout: count must be a positive perfect square");
    }
    LayoutSpec l{"square_" + std::to_string(side) + "x" + std::to_string(side), side, side, {}, 0.0f};
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) {
            l.slots.push_back({r, c});
        }
    }
    return l;
}

/// Largest Euclidean distance between two sub-image centers.
inline double layout_compactness(const LayoutSpec& layout, std::size_t sub_h, std::size_t sub_w)
{
    if (layout.slots.size() < 2) {
        throw std::invalid_argument("layout_compactness: need at least two slots");
    }
    double best = 0.0;
    for (std::size_t a = 0; a < layout.slots.size(); ++a) {
        for (std::size_t b = a + 1; b < layout.slots.size(); ++b) {
            const double dy = (static_cast<double>(layout.slots[a].row) -
                               static_cast<double>(layout.slots[b].row)) * static_cast<double>(sub_h);
            const double dx = (static_cast<double>(layout.slots[a].col) -
                               static_cast<double>(layout.slots[b].col)) * static_cast<double>(sub_w);
            best = std::max(best, std::hypot(dy, dx));
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Frame order variants

struct ForwardOrder {
    friend bool operator==(const ForwardOrder&, const ForwardOrder&) = default;
};
struct ReverseOrder {
    friend bool operator==(const ReverseOrder&, const ReverseOrder&) = default;
};
struct RandomOrder {
    std::uint64_t seed = 0;
    friend bool operator==(const RandomOrder&, const RandomOrder&) = default;
};
/// Keep the first keep_count frames; the remaining slots are left empty.
struct AbsenceOrder {
    std::size_t keep_count = 1;
    friend bool operator==(const AbsenceOrder&, const AbsenceOrder&) = default;
};

using OrderVariant = std::variant<ForwardOrder, ReverseOrder, RandomOrder, AbsenceOrder>;

inline std::string order_name(const OrderVariant& order)
{
    struct Namer {
        std::string operator()(const ForwardOrder&) const { return "forward"; }
        std::string operator()(const ReverseOrder&) const { return "reverse"; }
        std::string operator()(const RandomOrder& o) const
        {
            return "random(" + std::to_string(o.seed) + ")";
        }
        std::string operator()(const AbsenceOrder& o) const
        {
            return "absence(" + std::to_string(o.keep_count) + ")";
        }
    };
    return std::visit(Namer{}, order);
}

/// Source frame per slot (nullopt = absent) after applying `order` to t frames.
inline std::vector<std::optional<std::size_t>> slot_sources(const OrderVariant& order, std::size_t t)
{
    std::vector<std::optional<std::size_t>> out(t);
    if (const auto* absence = std::get_if<AbsenceOrder>(&order)) {
        if (absence->keep_count < 1 || absence->keep_count > t) {
            throw std::invalid_argument("absence order: keep_count must lie in [1, t]");
        }
        for (std::size_t i = 0; i < absence->keep_count; ++i) {
            out[i] = i;
        }
        return out;
    }
    std::vector<std::size_t> perm(t);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (std::holds_alternative<ReverseOrder>(order)) {
        std::reverse(perm.begin(), perm.end());
    } else if (const auto* random = std::get_if<RandomOrder>(&order)) {
        RandomStream stream(splitmix64(random->seed));
        for (std::size_t i = t; i > 1; --i) {
            std::swap(perm[i - 1], perm[static_cast<std::size_t>(stream.uniform(i))]);
        }
    }
    for (std::size_t i = 0; i < t; ++i) {
        out[i] = perm[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Assembly

/// Full-resolution tiled canvas before the final resize.
struct Canvas {
    Frame image;
    std::size_t cell_h = 0;
    std::size_t cell_w = 0;
    std::vector<std::optional<std::size_t>> slot_sources;
    /// rows*cols, row-major; nullopt for absent slots and unused cells.
    std::vector<std::optional<std::size_t>> provenance_grid;
};

struct Thumbnail {
    Frame image;
    std::size_t grid_rows = 0;
    std::size_t grid_cols = 0;
    std::vector<std::optional<std::size_t>> slot_sources;
    std::vector<std::optional<std::size_t>> provenance_grid;
};

inline Canvas assemble_canvas(const Clip& clip, const LayoutSpec& layout, const OrderVariant& order)
{
    layout.validate();
    if (layout.slots.size() != clip.size()) {
        throw std::invalid_argument("arrange: layout '" + layout.name + "' has " +
                                    std::to_string(layout.slots.size()) + " slots for " +
                                    std::to_string(clip.size()) + " frames");
    }
    const std::size_t h = clip.height();
    const std::size_t w = clip.width();
    Canvas canvas{Frame(clip.channels(), layout.rows * h, layout.cols * w, layout.fill_missing),
                  h, w, slot_sources(order, clip.size()),
                  std::vector<std::optional<std::size_t>>(layout.rows * layout.cols)};
    for (std::size_t s = 0; s < layout.slots.size(); ++s) {
        const auto& src = canvas.slot_sources[s];
        if (!src) {
            continue;
        }
        const Cell cell = layout.slots[s];
        paste(canvas.image, clip[*src], cell.row * h, cell.col * w);
        canvas.provenance_grid[cell.row * layout.cols + cell.col] = *src;
    }
    return canvas;
}

/// Tiles the clip at full resolution, then resizes the canvas to
/// thumb_side x thumb_side.
///
/// When the canvas is exactly twice the thumbnail and cells have even sides,
/// every output pixel reads a 2x2 block inside one cell with weight 1/2 on
/// each axis, so each frame is decimated on its own and pasted instead. The
/// result is bit-identical to resizing the assembled canvas.
inline Thumbnail arrange(const Clip& clip, const LayoutSpec& layout, const OrderVariant& order,
                         std::size_t thumb_side = kDefaultThumbSide)
{
    if (thumb_side == 0) {
        throw std::invalid_argument("arrange: thumbnail side must be positive");
    }
    const std::size_t h = clip.height();
    const std::size_t w = clip.width();
    const bool decimate_cells = h % 2 == 0 && w % 2 == 0 && layout.rows * h == 2 * thumb_side &&
                                layout.cols * w == 2 * thumb_side;
    if (!decimate_cells) {
        Canvas canvas = assemble_canvas(clip, layout, order);
        return Thumbnail{resize_bilinear(canvas.image, thumb_side, thumb_side), layout.rows,
                         layout.cols, std::move(canvas.slot_sources),
                         std::move(canvas.provenance_grid)};
    }

    layout.validate();
    if (layout.slots.size() != clip.size()) {
        throw std::invalid_argument("arrange: layout '" + layout.name + "' has " +
                                    std::to_string(layout.slots.size()) + " slots for " +
                                    std::to_string(clip.size()) + " frames");
    }
    Thumbnail t{Frame(clip.channels(), thumb_side, thumb_side, layout.fill_missing), layout.rows,
                layout.cols, slot_sources(order, clip.size()),
                std::vector<std::optional<std::size_t>>(layout.rows * layout.cols)};
    for (std::size_t s = 0; s < layout.slots.size(); ++s) {
        const auto& src = t.slot_sources[s];
        if (!src) {
            continue;
        }
        const Cell cell = layout.slots[s];
        paste(t.image, resize_bilinear(clip[*src], h / 2, w / 2), cell.row * h / 2, cell.col * w / 2);
        t.provenance_grid[cell.row * layout.cols + cell.col] = *src;
    }
    return t;
}

/// Extracts grid cell (row, col) of a canvas whose cells are cell_h x cell_w.
inline Frame slice_cell(const Frame& canvas, Cell cell, std::size_t cell_h, std::size_t cell_w)
{
    return crop(canvas, Rect{cell.row * cell_h, cell.col * cell_w, (cell.row + 1) * cell_h,
                             (cell.col + 1) * cell_w});
}

} // namespace tall
