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

// Raster file I/O: PNG (libpng), JPEG (libjpeg, read only) and binary
// PGM/PPM. Pixels become floats in [0,1]; writes quantize with round-half-up.

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>
#include <zlib.h>

#include "pixel_core.hpp"

namespace tall {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string lower_extension(const std::filesystem::path& p)
{
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return ext;
}

// Interleaved 8-bit samples -> planar frame.
inline Frame frame_from_interleaved(const std::vector<std::uint8_t>& px, std::size_t channels,
                                    std::size_t height, std::size_t width)
{
    Frame f(channels, height, width);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        float* dst = f.plane(ch).data();
        const std::uint8_t* src = px.data() + ch;
        for (std::size_t i = 0; i < height * width; ++i) {
            dst[i] = from_u8(src[i * channels]);
        }
    }
    return f;
}

inline std::vector<std::uint8_t> interleave(const Frame& f)
{
    const std::size_t channels = f.channels();
    std::vector<std::uint8_t> px(channels * f.plane_size());
    for (std::size_t ch = 0; ch < channels; ++ch) {
        const float* src = f.plane(ch).data();
        std::uint8_t* dst = px.data() + ch;
        for (std::size_t i = 0; i < f.plane_size(); ++i) {
            dst[i * channels] = to_u8(src[i]);
        }
    }
    return px;
}

inline Frame read_png(const std::filesystem::path& path, std::size_t channels)
{
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
        throw ImageIoError("cannot read PNG " + path.string() + ": " + image.message);
    }
    image.format = channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, px.data(), 0, nullptr) == 0) {
        std::string msg = image.message;
        png_image_free(&image);
        throw ImageIoError("cannot decode PNG " + path.string() + ": " + msg);
    }
    return frame_from_interleaved(px, channels, image.height, image.width);
}

// Fixed row filter; the zlib level is the caller's speed/size trade-off.
// Levels 1-3 use run-length matching, which on filtered image rows is both
// faster and smaller than zlib's default search at those levels.
inline void write_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& px,
                      std::size_t channels, std::size_t height, std::size_t width, int level)
{
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"),
                                                          &std::fclose);
    if (!file) {
        throw ImageIoError("cannot open " + path.string() + " for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw ImageIoError("cannot allocate PNG writer");
    }
    if (setjmp(png_jmpbuf(png)) != 0) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError("cannot write PNG " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, level);
    png_set_compression_strategy(png, level >= 1 && level <= 3 ? Z_RLE : Z_DEFAULT_STRATEGY);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, level == 0 ? PNG_FILTER_NONE : PNG_FILTER_SUB);
    png_write_info(png, info);
    const std::size_t stride = width * channels;
    for (std::size_t r = 0; r < height; ++r) {
        png_write_row(png, px.data() + r * stride);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) {
        throw ImageIoError("cannot write PNG " + path.string());
    }
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

inline Frame read_jpeg(const std::filesystem::path& path, std::size_t channels)
{
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"),
                                                          &std::fclose);
    if (!file) {
        throw ImageIoError("cannot open " + path.string());
    }
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = &jpeg_error_exit;
    std::vector<std::uint8_t> px;
    if (setjmp(err.jump) != 0) {
        jpeg_destroy_decompress(&cinfo);
        throw ImageIoError("cannot decode JPEG " + path.string() + ": " + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = channels == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const std::size_t width = cinfo.output_width;
    const std::size_t height = cinfo.output_height;
    const std::size_t stride = width * static_cast<std::size_t>(cinfo.output_components);
    px.resize(stride * height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = px.data() + static_cast<std::size_t>(cinfo.output_scanline) * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return frame_from_interleaved(px, channels, height, width);
}

inline Frame read_pnm(const std::filesystem::path& path, std::size_t channels)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ImageIoError("cannot open " + path.string());
    }
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") {
        throw ImageIoError(path.string() + ": only binary PGM (P5) and PPM (P6) are supported");
    }
    auto next_int = [&]() {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string comment;
            std::getline(in, comment);
            in >> std::ws;
        }
        long v = -1;
        in >> v;
        return v;
    };
    const long width = next_int();
    const long height = next_int();
    const long maxval = next_int();
    if (!in || width <= 0 || height <= 0 || maxval != 255) {
        throw ImageIoError(path.string() + ": malformed header (8-bit images only)");
    }
    in.get();
    const std::size_t file_channels = magic == "P5" ? 1 : 3;
    std::vector<std::uint8_t> raw(static_cast<std::size_t>(width * height) * file_channels);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw ImageIoError(path.string() + ": truncated pixel data");
    }
    const auto h = static_cast<std::size_t>(height);
    const auto w = static_cast<std::size_t>(width);
    if (file_channels == channels) {
        return frame_from_interleaved(raw, channels, h, w);
    }
    std::vector<std::uint8_t> px(h * w * channels);
    for (std::size_t i = 0; i < h * w; ++i) {
        if (channels == 3) { // gray -> rgb
            px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = raw[i];
        } else { // rgb -> gray, Rec. 601 luma
            const double y = 0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2];
            px[i] = static_cast<std::uint8_t>(std::clamp(std::floor(y + 0.5), 0.0, 255.0));
        }
    }
    return frame_from_interleaved(px, channels, h, w);
}

} // namespace detail

inline bool is_supported_image(const std::filesystem::path& path)
{
    const auto ext = detail::lower_extension(path);
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".ppm" || ext == ".pgm";
}

/// Decodes an image file into a frame with `channels` channels (1 or 3).
inline Frame read_image(const std::filesystem::path& path, std::size_t channels = 3)
{
    if (channels != 1 && channels != 3) {
        throw std::invalid_argument("read_image: channels must be 1 or 3");
    }
    const auto ext = detail::lower_extension(path);
    if (ext == ".png") {
        return detail::read_png(path, channels);
    }
    if (ext == ".jpg" || ext == ".jpeg") {
        return detail::read_jpeg(path, channels);
    }
    if (ext == ".ppm" || ext == ".pgm") {
        return detail::read_pnm(path, channels);
    }
    throw ImageIoError("unsupported image format: " + path.string());
}

inline constexpr int kDefaultPngLevel = 6;

/// Lossless 8-bit write. PNG for .png (zlib level 0-9), otherwise binary PGM/PPM.
inline void write_image(const std::filesystem::path& path, const Frame& frame,
                        int png_level = kDefaultPngLevel)
{
    if (png_level < 0 || png_level > 9) {
        throw std::invalid_argument("write_image: PNG compression level must be in [0, 9]");
    }
    const auto px = detail::interleave(frame);
    const auto ext = detail::lower_extension(path);
    if (ext == ".png") {
        detail::write_png(path, px, frame.channels(), frame.height(), frame.width(), png_level);
        return;
    }
    if (ext == ".ppm" || ext == ".pgm") {
        std::ofstream out(path, std::ios::binary);
        out << (frame.channels() == 1 ? "P5" : "P6") << "\n"
            << frame.width() << " " << frame.height() << "\n255\n";
        out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
        if (!out) {
            throw ImageIoError("cannot write " + path.string());
        }
        return;
    }
    throw ImageIoError("unsupported output format: " + path.string());
}

} // namespace tall
