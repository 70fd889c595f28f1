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
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tall {

/// Half-open pixel rectangle [row0,row1) x [col0,col1).
struct Rect {
    std::size_t row0 = 0;
    std::size_t col0 = 0;
    std::size_t row1 = 0;
    std::size_t col1 = 0;

    std::size_t height() const { return row1 > row0 ? row1 - row0 : 0; }
    std::size_t width() const { return col1 > col0 ? col1 - col0 : 0; }
    bool empty() const { return height() == 0 || width() == 0; }
    bool contains(std::size_t row, std::size_t col) const
    {
        return row >= row0 && row < row1 && col >= col0 && col < col1;
    }

    friend bool operator==(const Rect&, const Rect&) = default;
};

inline std::string to_string(const Rect& r)
{
    std::ostringstream os;
    os << "(" << r.row0 << "," << r.col0 << "," << r.row1 << "," << r.col1 << ")";
    return os.str();
}

/// Channel-planar float image. Values are nominally in [0,1].
class Frame {
public:
    Frame() = default;

    Frame(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f)
        : channels_(channels), height_(height), width_(width)
    {
        validate_dims(channels, height, width);
        data_.assign(channels * height * width, fill);
    }

    Frame(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data)
        : channels_(channels), height_(height), width_(width), data_(std::move(data))
    {
        validate_dims(channels, height, width);
        if (data_.size() != channels * height * width) {
            throw std::invalid_argument("frame buffer length does not match C*H*W");
        }
    }

    std::size_t channels() const { return channels_; }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t plane_size() const { return height_ * width_; }
    bool empty() const { return data_.empty(); }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    std::span<const float> plane(std::size_t c) const
    {
        return std::span<const float>(data_).subspan(c * plane_size(), plane_size());
    }
    std::span<float> plane(std::size_t c)
    {
        return std::span<float>(data_).subspan(c * plane_size(), plane_size());
    }

    float at(std::size_t c, std::size_t row, std::size_t col) const
    {
        return data_[(c * height_ + row) * width_ + col];
    }
    float& at(std::size_t c, std::size_t row, std::size_t col)
    {
        return data_[(c * height_ + row) * width_ + col];
    }

    Rect bounds() const { return Rect{0, 0, height_, width_}; }

    bool same_shape(const Frame& other) const
    {
        return channels_ == other.channels_ && height_ == other.height_ &&
               width_ == other.width_;
    }

    friend bool operator==(const Frame&, const Frame&) = default;

private:
    static void validate_dims(std::size_t channels, std::size_t height, std::size_t width)
    {
        if (channels != 1 && channels != 3) {
            throw std::invalid_argument("frame channel count must be 1 or 3");
        }
        if (height == 0 || width == 0) {
            throw std::invalid_argument("frame dimensions must be positive");
        }
    }

    std::size_t channels_ = 0;
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> data_;
};

/// 8-bit to float and back. Quantization rounds half up.
inline float from_u8(std::uint8_t v) { return static_cast<float>(v) / 255.0f; }

/// floor(v * 255 + 0.5) saturated to [0, 255]; NaN maps to 0.
inline std::uint8_t to_u8(float v)
{
    const double scaled = static_cast<double>(v) * 255.0 + 0.5;
    if (!(scaled > 0.0)) {
        return 0;
    }
    if (scaled >= 255.0) {
        return 255;
    }
    return static_cast<std::uint8_t>(scaled); // truncation is floor here
}

namespace detail {

struct AxisSample {
    std::size_t lo;
    std::size_t hi;
    double frac;
};

// Output index i reads input coordinate (i + 0.5) * in / out - 0.5, clamped to the edges.
inline std::vector<AxisSample> axis_samples(std::size_t in, std::size_t out)
{
    std::vector<AxisSample> samples(out);
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    const double last = static_cast<double>(in - 1);
    for (std::size_t i = 0; i < out; ++i) {
        const double src = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, last);
        const auto lo = static_cast<std::size_t>(std::floor(src));
        samples[i] = AxisSample{lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
    }
    return samples;
}

// a + t * (b - a), kept between a and b: constant inputs stay exact and
// rounding never leaves the interval.
inline float lerp_bounded(float a, float b, float t)
{
    const float v = a + t * (b - a);
    return std::min(std::max(v, std::min(a, b)), std::max(a, b));
}

struct HorizontalTaps {
    std::vector<std::uint32_t> lo;
    std::vector<std::uint32_t> hi;
    std::vector<float> t;
};

inline HorizontalTaps horizontal_taps(const std::vector<AxisSample>& xs)
{
    HorizontalTaps taps{std::vector<std::uint32_t>(xs.size()), std::vector<std::uint32_t>(xs.size()),
                        std::vector<float>(xs.size())};
    for (std::size_t j = 0; j < xs.size(); ++j) {
        taps.lo[j] = static_cast<std::uint32_t>(xs[j].lo);
        taps.hi[j] = static_cast<std::uint32_t>(xs[j].hi);
        taps.t[j] = static_cast<float>(xs[j].frac);
    }
    return taps;
}

inline void lerp_row_horizontal(const float* __restrict in, float* __restrict out,
                                const HorizontalTaps& taps)
{
    for (std::size_t j = 0; j < taps.t.size(); ++j) {
        out[j] = lerp_bounded(in[taps.lo[j]], in[taps.hi[j]], taps.t[j]);
    }
}

inline void lerp_rows_vertical(const float* __restrict top, const float* __restrict bottom,
                               float t, float* __restrict out, std::size_t n)
{
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = lerp_bounded(top[j], bottom[j], t);
    }
}

} // namespace detail

/// Bilinear resize with half-pixel centers and edge clamping. Same-size
/// requests return an exact copy.
inline Frame resize_bilinear(const Frame& frame, std::size_t out_h, std::size_t out_w)
{
    if (out_h == 0 || out_w == 0) {
        throw std::invalid_argument("resize_bilinear: output dimensions must be positive");
    }
    if (out_h == frame.height() && out_w == frame.width()) {
        return frame;
    }

    const auto ys = detail::axis_samples(frame.height(), out_h);
    const auto taps = detail::horizontal_taps(detail::axis_samples(frame.width(), out_w));
    const std::size_t in_h = frame.height();
    const std::size_t in_w = frame.width();
    Frame out(frame.channels(), out_h, out_w);

    // Separable passes. The horizontal one gathers, so run it on whichever
    // side has fewer rows: source rows that are actually sampled, or output rows.
    std::vector<char> needed(in_h, 0);
    for (const auto& y : ys) {
        needed[y.lo] = needed[y.hi] = 1;
    }
    const auto sampled_rows = static_cast<std::size_t>(std::count(needed.begin(), needed.end(), 1));
    const bool vertical_first = out_h < sampled_rows;

    std::vector<float> tmp(vertical_first ? out_h * in_w : in_h * out_w);
    for (std::size_t c = 0; c < frame.channels(); ++c) {
        const float* src = frame.plane(c).data();
        float* dst = out.plane(c).data();
        if (vertical_first) {
            for (std::size_t i = 0; i < out_h; ++i) {
                detail::lerp_rows_vertical(src + ys[i].lo * in_w, src + ys[i].hi * in_w,
                                           static_cast<float>(ys[i].frac), tmp.data() + i * in_w,
                                           in_w);
                detail::lerp_row_horizontal(tmp.data() + i * in_w, dst + i * out_w, taps);
            }
        } else {
            for (std::size_t r = 0; r < in_h; ++r) {
                if (needed[r]) {
                    detail::lerp_row_horizontal(src + r * in_w, tmp.data() + r * out_w, taps);
                }
            }
            for (std::size_t i = 0; i < out_h; ++i) {
                detail::lerp_rows_vertical(tmp.data() + ys[i].lo * out_w,
                                           tmp.data() + ys[i].hi * out_w,
                                           static_cast<float>(ys[i].frac), dst + i * out_w, out_w);
            }
        }
    }
    return out;
}

inline bool rect_within(const Rect& rect, const Frame& frame)
{
    return rect.row0 <= rect.row1 && rect.col0 <= rect.col1 && rect.row1 <= frame.height() &&
           rect.col1 <= frame.width();
}

/// Copies the pixels under `rect` into a new frame.
inline Frame crop(const Frame& frame, const Rect& rect)
{
    if (!rect_within(rect, frame) || rect.empty()) {
        throw std::invalid_argument("crop: rect " + to_string(rect) + " outside frame bounds");
    }
    Frame out(frame.channels(), rect.height(), rect.width());
    for (std::size_t c = 0; c < frame.channels(); ++c) {
        for (std::size_t r = 0; r < rect.height(); ++r) {
            const float* src = frame.plane(c).data() + (rect.row0 + r) * frame.width() + rect.col0;
            std::copy(src, src + rect.width(), &out.at(c, r, 0));
        }
    }
    return out;
}

/// Writes `patch` into `dest` with its top-left corner at (row, col).
inline void paste(Frame& dest, const Frame& patch, std::size_t row, std::size_t col)
{
    if (patch.channels() != dest.channels()) {
        throw std::invalid_argument("paste: channel mismatch");
    }
    if (row + patch.height() > dest.height() || col + patch.width() > dest.width()) {
        throw std::invalid_argument("paste: patch exceeds destination bounds");
    }
    for (std::size_t c = 0; c < patch.channels(); ++c) {
        for (std::size_t r = 0; r < patch.height(); ++r) {
            const float* src = patch.plane(c).data() + r * patch.width();
            std::copy(src, src + patch.width(), &dest.at(c, row + r, col));
        }
    }
}

/// Grows `bbox` by margin*height above and below and margin*width left and
/// right (rounded to whole pixels), clipped to a height x width frame.
inline Rect expand_bbox(const Rect& bbox, double margin, std::size_t height, std::size_t width)
{
    if (bbox.row1 <= bbox.row0 || bbox.col1 <= bbox.col0) {
        throw std::invalid_argument("face_crop: degenerate bounding box " + to_string(bbox));
    }
    if (!(margin >= 0.0)) {
        throw std::invalid_argument("face_crop: margin must be non-negative");
    }
    const auto dy = static_cast<long long>(std::llround(margin * static_cast<double>(bbox.height())));
    const auto dx = static_cast<long long>(std::llround(margin * static_cast<double>(bbox.width())));
    const auto clip = [](long long v, std::size_t hi) {
        return static_cast<std::size_t>(std::clamp<long long>(v, 0, static_cast<long long>(hi)));
    };
    Rect out{clip(static_cast<long long>(bbox.row0) - dy, height),
             clip(static_cast<long long>(bbox.col0) - dx, width),
             clip(static_cast<long long>(bbox.row1) + dy, height),
             clip(static_cast<long long>(bbox.col1) + dx, width)};
    if (out.empty()) {
        throw std::invalid_argument("face_crop: bounding box " + to_string(bbox) +
                                    " lies outside the frame");
    }
    return out;
}

inline Frame face_crop(const Frame& frame, const Rect& bbox, double margin)
{
    return crop(frame, expand_bbox(bbox, margin, frame.height(), frame.width()));
}

} // namespace tall
