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

// Set-valued model of windowed attention over a thumbnail token grid.
//
// Every token carries the set of source frames it was cut from (its label) and
// the set of frames whose information can have reached it (its provenance).
// Attention inside a window makes every token reachable from every other
// token of that window; patch merging fuses 2x2 neighborhoods. Shifted windows
// are modeled as offset partitions with truncated edge windows, which is the
// reachability that cyclic shift plus the attention mask produces.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pixel_core.hpp"
#include "tall_transform.hpp"

namespace tall {

inline constexpr std::size_t kMaxFrames = 64;

/// Set of frame ids in [0, 64).
class FrameSet {
public:
    constexpr FrameSet() = default;
    static constexpr FrameSet single(std::size_t frame)
    {
        if (frame >= kMaxFrames) {
            throw std::invalid_argument("frame id exceeds FrameSet capacity");
        }
        return FrameSet(std::uint64_t{1} << frame);
    }
    static constexpr FrameSet from_bits(std::uint64_t bits) { return FrameSet(bits); }

    constexpr std::uint64_t bits() const { return bits_; }
    constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr bool contains(std::size_t frame) const
    {
        return frame < kMaxFrames && ((bits_ >> frame) & 1U) != 0;
    }
    constexpr bool includes(FrameSet other) const { return (bits_ & other.bits_) == other.bits_; }

    constexpr FrameSet& operator|=(FrameSet other)
    {
        bits_ |= other.bits_;
        return *this;
    }
    friend constexpr FrameSet operator|(FrameSet a, FrameSet b) { return a |= b; }
    friend constexpr bool operator==(FrameSet, FrameSet) = default;

    std::vector<std::size_t> members() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < kMaxFrames; ++i) {
            if (contains(i)) {
                out.push_back(i);
            }
        }
        return out;
    }

private:
    constexpr explicit FrameSet(std::uint64_t bits) : bits_(bits) {}
    std::uint64_t bits_ = 0;
};

class TokenGrid {
public:
    TokenGrid() = default;

    /// Grid whose token i came from frame labels[i]; an empty set marks
    /// filler tokens that belong to no frame.
    TokenGrid(std::size_t height, std::size_t width, std::vector<FrameSet> labels)
        : height_(height), width_(width), labels_(std::move(labels)), provenance_(labels_)
    {
        if (height == 0 || width == 0) {
            throw std::invalid_argument("token grid dimensions must be positive");
        }
        if (labels_.size() != height * width) {
            throw std::invalid_argument("token grid label count does not match dimensions");
        }
    }

    TokenGrid(std::size_t height, std::size_t width, std::vector<FrameSet> labels,
              std::vector<FrameSet> provenance)
        : TokenGrid(height, width, std::move(labels))
    {
        if (provenance.size() != labels_.size()) {
            throw std::invalid_argument("token grid provenance count does not match dimensions");
        }
        provenance_ = std::move(provenance);
    }

    /// rows x cols sub-image partition; frame ids are assigned row-major.
    static TokenGrid partitioned(std::size_t height, std::size_t width, std::size_t rows,
                                 std::size_t cols)
    {
        return from_layout(height, width, square_free_layout(rows, cols));
    }

    /// Tokens labelled by the layout slot whose cell covers them. Cells
    /// without a slot hold no frame.
    static TokenGrid from_layout(std::size_t height, std::size_t width, const LayoutSpec& layout)
    {
        layout.validate();
        if (height < layout.rows || width < layout.cols) {
            throw std::invalid_argument("token grid smaller than layout grid");
        }
        if (layout.slots.size() > kMaxFrames) {
            throw std::invalid_argument("layout has more frames than FrameSet supports");
        }
        std::vector<FrameSet> cell_label(layout.rows * layout.cols);
        for (std::size_t s = 0; s < layout.slots.size(); ++s) {
            cell_label[layout.slots[s].row * layout.cols + layout.slots[s].col] = FrameSet::single(s);
        }
        std::vector<FrameSet> labels(height * width);
        for (std::size_t r = 0; r < height; ++r) {
            const std::size_t cell_r = r * layout.rows / height;
            for (std::size_t c = 0; c < width; ++c) {
                const std::size_t cell_c = c * layout.cols / width;
                labels[r * width + c] = cell_label[cell_r * layout.cols + cell_c];
            }
        }
        return TokenGrid(height, width, std::move(labels));
    }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return labels_.size(); }

    std::span<const FrameSet> labels() const { return labels_; }
    std::span<const FrameSet> provenance() const { return provenance_; }
    std::span<FrameSet> provenance() { return provenance_; }

    FrameSet label(std::size_t row, std::size_t col) const { return labels_[row * width_ + col]; }
    FrameSet provenance(std::size_t row, std::size_t col) const
    {
        return provenance_[row * width_ + col];
    }

    /// Union of all token labels.
    FrameSet all_frames() const
    {
        FrameSet s;
        for (auto l : labels_) {
            s |= l;
        }
        return s;
    }

private:
    static LayoutSpec square_free_layout(std::size_t rows, std::size_t cols)
    {
        LayoutSpec l{"grid", rows, cols, {}, 0.0f};
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
                l.slots.push_back({r, c});
            }
        }
        return l;
    }

    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<FrameSet> labels_;
    std::vector<FrameSet> provenance_;
};

struct WindowStageConfig {
    std::size_t window = 7;
    std::size_t shift = 0;
    bool merge_after = false;

    friend bool operator==(const WindowStageConfig&, const WindowStageConfig&) = default;
};

/// A rectangular attention window, in token coordinates.
using Window = Rect;

namespace detail {

// [0,shift), [shift, shift+window), ... truncated at extent.
inline std::vector<std::pair<std::size_t, std::size_t>> window_bands(std::size_t extent,
                                                                     std::size_t window,
                                                                     std::size_t shift)
{
    std::vector<std::pair<std::size_t, std::size_t>> bands;
    std::size_t pos = 0;
    if (shift > 0) {
        bands.emplace_back(0, std::min(shift, extent));
        pos = shift;
    }
    while (pos < extent) {
        bands.emplace_back(pos, std::min(pos + window, extent));
        pos += window;
    }
    return bands;
}

} // namespace detail

/// Tiles the grid with window x window regions offset by `shift`. Every token
/// lands in exactly one window; windows at the edges are truncated.
inline std::vector<Window> partition_windows(const TokenGrid& grid, std::size_t window,
                                             std::size_t shift)
{
    if (window == 0) {
        throw std::invalid_argument("partition_windows: window must be positive");
    }
    if (window > std::min(grid.height(), grid.width())) {
        throw std::invalid_argument("partition_windows: window " + std::to_string(window) +
                                    " larger than grid " + std::to_string(grid.height()) + "x" +
                                    std::to_string(grid.width()));
    }
    if (shift >= window) {
        throw std::invalid_argument("partition_windows: shift must be smaller than window");
    }
    const auto row_bands = detail::window_bands(grid.height(), window, shift);
    const auto col_bands = detail::window_bands(grid.width(), window, shift);
    std::vector<Window> windows;
    windows.reserve(row_bands.size() * col_bands.size());
    for (const auto& [r0, r1] : row_bands) {
        for (const auto& [c0, c1] : col_bands) {
            windows.push_back(Window{r0, c0, r1, c1});
        }
    }
    return windows;
}

/// Flat token indices covered by a window.
inline std::vector<std::size_t> window_tokens(const Window& w, std::size_t grid_width)
{
    std::vector<std::size_t> out;
    out.reserve(w.height() * w.width());
    for (std::size_t r = w.row0; r < w.row1; ++r) {
        for (std::size_t c = w.col0; c < w.col1; ++c) {
            out.push_back(r * grid_width + c);
        }
    }
    return out;
}

inline FrameSet window_label_union(const TokenGrid& grid, const Window& w)
{
    FrameSet s;
    for (std::size_t r = w.row0; r < w.row1; ++r) {
        for (std::size_t c = w.col0; c < w.col1; ++c) {
            s |= grid.label(r, c);
        }
    }
    return s;
}

struct CrossingResult {
    std::size_t count = 0;
    std::vector<std::size_t> windows; // indices into the partition
};

/// Windows whose tokens come from two or more source frames.
inline CrossingResult crossing_windows(const TokenGrid& grid, const std::vector<Window>& windows)
{
    CrossingResult out;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        if (window_label_union(grid, windows[i]).size() >= 2) {
            out.windows.push_back(i);
        }
    }
    out.count = out.windows.size();
    return out;
}

/// 2x2 patch merging: halves both dimensions, unions labels and provenance.
inline TokenGrid merge_patches(const TokenGrid& grid)
{
    if (grid.height() % 2 != 0 || grid.width() % 2 != 0) {
        throw std::invalid_argument("merge_patches: grid dimensions must be even, got " +
                                    std::to_string(grid.height()) + "x" +
                                    std::to_string(grid.width()));
    }
    const std::size_t h = grid.height() / 2;
    const std::size_t w = grid.width() / 2;
    std::vector<FrameSet> labels(h * w);
    std::vector<FrameSet> prov(h * w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            FrameSet l;
            FrameSet p;
            for (std::size_t dr = 0; dr < 2; ++dr) {
                for (std::size_t dc = 0; dc < 2; ++dc) {
                    l |= grid.label(2 * r + dr, 2 * c + dc);
                    p |= grid.provenance(2 * r + dr, 2 * c + dc);
                }
            }
            labels[r * w + c] = l;
            prov[r * w + c] = p;
        }
    }
    return TokenGrid(h, w, std::move(labels), std::move(prov));
}

/// Within-window any-to-any mixing, then optional patch merging.
inline TokenGrid propagate_stage(const TokenGrid& grid, const WindowStageConfig& stage)
{
    TokenGrid out = grid;
    auto prov = out.provenance();
    for (const auto& w : partition_windows(grid, stage.window, stage.shift)) {
        FrameSet u;
        for (std::size_t r = w.row0; r < w.row1; ++r) {
            for (std::size_t c = w.col0; c < w.col1; ++c) {
                u |= grid.provenance(r, c);
            }
        }
        for (std::size_t r = w.row0; r < w.row1; ++r) {
            for (std::size_t c = w.col0; c < w.col1; ++c) {
                prov[r * grid.width() + c] = u;
            }
        }
    }
    return stage.merge_after ? merge_patches(out) : out;
}

struct StageReport {
    std::size_t stage = 0;
    std::size_t grid_height = 0;
    std::size_t grid_width = 0;
    std::size_t window = 0;
    std::size_t shift = 0;
    bool merge_after = false;
    std::size_t num_windows = 0;
    std::size_t num_crossing = 0;
    double multi_frame_fraction = 0.0;
};

struct PipelineReport {
    std::vector<StageReport> stages;
    bool full_mixing = false;
};

inline double multi_frame_fraction(const TokenGrid& grid)
{
    const auto prov = grid.provenance();
    const auto multi = std::count_if(prov.begin(), prov.end(),
                                     [](FrameSet s) { return s.size() >= 2; });
    return static_cast<double>(multi) / static_cast<double>(prov.size());
}

/// Runs the stages in order. Crossing counts are taken on the grid entering
/// each stage; multi-frame fractions on the grid leaving it.
inline PipelineReport analyze_pipeline(const std::vector<WindowStageConfig>& stages,
                                       const TokenGrid& grid0)
{
    if (stages.empty()) {
        throw std::invalid_argument("analyze_pipeline: no stages");
    }
    const FrameSet everything = grid0.all_frames();
    PipelineReport report;
    TokenGrid grid = grid0;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& stage = stages[i];
        std::vector<Window> windows;
        try {
            windows = partition_windows(grid, stage.window, stage.shift);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("stage " + std::to_string(i) + ": " + e.what());
        }
        StageReport sr;
        sr.stage = i;
        sr.grid_height = grid.height();
        sr.grid_width = grid.width();
        sr.window = stage.window;
        sr.shift = stage.shift;
        sr.merge_after = stage.merge_after;
        sr.num_windows = windows.size();
        sr.num_crossing = crossing_windows(grid, windows).count;
        try {
            grid = propagate_stage(grid, stage);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("stage " + std::to_string(i) + ": " + e.what());
        }
        sr.multi_frame_fraction = multi_frame_fraction(grid);
        report.stages.push_back(sr);
    }
    const auto prov = grid.provenance();
    report.full_mixing = std::all_of(prov.begin(), prov.end(),
                                     [&](FrameSet s) { return s == everything; });
    return report;
}

/// Hierarchical shifted-window backbone geometry.
struct SwinGeometry {
    std::size_t input_side = 224;
    std::size_t patch = 4;
    std::vector<std::size_t> windows{14, 14, 14, 7};
    std::vector<std::size_t> depths{2, 2, 2, 2};
};

/// Expands a backbone geometry into per-block stage configs. Blocks alternate
/// shift 0 and window/2; a window that covers the whole feature map is
/// clamped to it and never shifted. Every stage but the last ends with a merge.
inline std::vector<WindowStageConfig> swin_stages(const SwinGeometry& g)
{
    if (g.patch == 0 || g.input_side == 0 || g.input_side % g.patch != 0) {
        throw std::invalid_argument("input side must be a positive multiple of the patch size");
    }
    if (g.windows.empty() || g.windows.size() != g.depths.size()) {
        throw std::invalid_argument("windows and depths must be nonempty and of equal length");
    }
    std::vector<WindowStageConfig> out;
    std::size_t side = g.input_side / g.patch;
    for (std::size_t s = 0; s < g.windows.size(); ++s) {
        if (side == 0) {
            throw std::invalid_argument("feature map vanishes before stage " + std::to_string(s));
        }
        if (g.windows[s] == 0 || g.depths[s] == 0) {
            throw std::invalid_argument("window sizes and depths must be positive");
        }
        const bool global = g.windows[s] >= side;
        const std::size_t window = global ? side : g.windows[s];
        const bool last_stage = s + 1 == g.windows.size();
        for (std::size_t b = 0; b < g.depths[s]; ++b) {
            WindowStageConfig cfg;
            cfg.window = window;
            cfg.shift = (b % 2 == 1 && !global) ? window / 2 : 0;
            cfg.merge_after = !last_stage && b + 1 == g.depths[s];
            out.push_back(cfg);
        }
        if (!last_stage) {
            if (side % 2 != 0) {
                throw std::invalid_argument("feature map side " + std::to_string(side) +
                                            " cannot be merged");
            }
            side /= 2;
        }
    }
    return out;
}

inline TokenGrid initial_token_grid(const SwinGeometry& g, const LayoutSpec& layout)
{
    if (g.patch == 0 || g.input_side % g.patch != 0) {
        throw std::invalid_argument("input side must be a positive multiple of the patch size");
    }
    const std::size_t side = g.input_side / g.patch;
    return TokenGrid::from_layout(side, side, layout);
}

// ---------------------------------------------------------------------------
// Attention complexity

enum class ModelKind { ViT, Swin, ViViT, TALLSwin };

inline std::string model_kind_name(ModelKind k)
{
    switch (k) {
    case ModelKind::ViT: return "ViT";
    case ModelKind::Swin: return "Swin";
    case ModelKind::ViViT: return "ViViT";
    case ModelKind::TALLSwin: return "TALLSwin";
    }
    return "?";
}

inline ModelKind parse_model_kind(std::string name)
{
    std::string key;
    for (char ch : name) {
        if (ch != '-' && ch != '_') {
            key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (key == "vit") return ModelKind::ViT;
    if (key == "swin") return ModelKind::Swin;
    if (key == "vivit") return ModelKind::ViViT;
    if (key == "tallswin") return ModelKind::TALLSwin;
    throw std::invalid_argument("unknown model kind '" + name + "'");
}

struct ComplexityInput {
    std::uint64_t frames = 1;            // T
    std::uint64_t patches_per_frame = 1; // N
    std::uint64_t channels = 1;          // C
    std::uint64_t patches_per_window = 1; // P
};

/// Operation count stored in half units so that the 1/2 factor stays exact.
class OpCount {
public:
    constexpr OpCount() = default;
    static constexpr OpCount from_halves(std::uint64_t halves) { return OpCount(halves); }
    static OpCount whole(std::uint64_t n);

    constexpr std::uint64_t halves() const { return halves_; }
    constexpr bool is_integral() const { return halves_ % 2 == 0; }
    constexpr std::uint64_t integral_part() const { return halves_ / 2; }
    constexpr double value() const { return static_cast<double>(halves_) / 2.0; }

    std::string to_string() const
    {
        return std::to_string(halves_ / 2) + (is_integral() ? "" : ".5");
    }

    friend OpCount operator+(OpCount a, OpCount b);
    friend constexpr auto operator<=>(OpCount, OpCount) = default;

private:
    constexpr explicit OpCount(std::uint64_t halves) : halves_(halves) {}
    std::uint64_t halves_ = 0;
};

namespace detail {

inline std::uint64_t checked_mul(std::initializer_list<std::uint64_t> factors)
{
    std::uint64_t acc = 1;
    for (auto f : factors) {
        if (__builtin_mul_overflow(acc, f, &acc)) {
            throw std::overflow_error("operation count overflows 64 bits");
        }
    }
    return acc;
}

} // namespace detail

inline OpCount OpCount::whole(std::uint64_t n) { return OpCount(detail::checked_mul({n, 2})); }

inline OpCount operator+(OpCount a, OpCount b)
{
    std::uint64_t sum = 0;
    if (__builtin_add_overflow(a.halves_, b.halves_, &sum)) {
        throw std::overflow_error("operation count overflows 64 bits");
    }
    return OpCount(sum);
}

/// The two summands of each complexity formula: the channel-mixing term
/// (linear in tokens) and the attention term.
struct FlopTerms {
    OpCount projection;
    OpCount attention;
    OpCount total() const { return projection + attention; }
};

inline FlopTerms flop_terms(ModelKind kind, const ComplexityInput& in)
{
    const auto T = in.frames;
    const auto N = in.patches_per_frame;
    const auto C = in.channels;
    const auto P = in.patches_per_window;
    if (T == 0 || N == 0 || C == 0 || P == 0) {
        throw std::invalid_argument("complexity inputs must be positive");
    }
    using detail::checked_mul;
    switch (kind) {
    case ModelKind::ViT: // 4TNC^2 + 2TN^2C
        return {OpCount::whole(checked_mul({4, T, N, C, C})),
                OpCount::whole(checked_mul({2, T, N, N, C}))};
    case ModelKind::Swin: // 4TNC^2 + 2TPNC
        return {OpCount::whole(checked_mul({4, T, N, C, C})),
                OpCount::whole(checked_mul({2, T, P, N, C}))};
    case ModelKind::ViViT: // 4TNC + 2T^2N^2C
        return {OpCount::whole(checked_mul({4, T, N, C})),
                OpCount::whole(checked_mul({2, T, T, N, N, C}))};
    case ModelKind::TALLSwin: // TNC^2 + 1/2 TPNC
        return {OpCount::whole(checked_mul({T, N, C, C})),
                OpCount::from_halves(checked_mul({T, P, N, C}))};
    }
    throw std::invalid_argument("unknown model kind");
}

inline OpCount flops(ModelKind kind, const ComplexityInput& in) { return flop_terms(kind, in).total(); }

// ---------------------------------------------------------------------------
// Loss

inline constexpr double kLossEpsilon = 1e-7;

/// Mean binary cross-entropy with predictions clamped to [eps, 1-eps].
inline double bce_loss(std::span<const double> preds, std::span<const int> labels)
{
    if (preds.size() != labels.size()) {
        throw std::invalid_argument("bce_loss: predictions and labels differ in length");
    }
    if (preds.empty()) {
        throw std::invalid_argument("bce_loss: empty input");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!(preds[i] >= 0.0 && preds[i] <= 1.0)) {
            throw std::invalid_argument("bce_loss: prediction outside [0,1]");
        }
        if (labels[i] != 0 && labels[i] != 1) {
            throw std::invalid_argument("bce_loss: labels must be 0 or 1");
        }
        const double p = std::clamp(preds[i], kLossEpsilon, 1.0 - kLossEpsilon);
        sum += labels[i] == 1 ? std::log(p) : std::log1p(-p);
    }
    return -sum / static_cast<double>(preds.size());
}

} // namespace tall
