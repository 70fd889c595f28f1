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

// Batch conversion of frame directories into thumbnail datasets.
//
// Input layout:   <root>/{real,fake}/<video_id>/<zero-padded number>.<png|jpg|ppm|pgm>
// Output layout:  <out>/thumbnails/<video_id>/clip_<k>.png and <out>/manifest.json
//
// Per clip: face crop (bbox + margin) -> resize to frame_side^2 -> shared mask
// -> tile into the layout -> resize to thumb_side^2. Every random draw comes
// from a stream keyed by (seed, video id, clip index), so the worker count
// never changes any output byte. The manifest is written last, via a
// temporary file and rename.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "bbox.hpp"
#include "config.hpp"
#include "image_io.hpp"
#include "sampler.hpp"
#include "tall_transform.hpp"

namespace tall {

namespace fs = std::filesystem;

inline constexpr int kManifestVersion = 1;

inline std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("SHA-256 digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) {
        os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return os.str();
}

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const fs::path& path, const std::string& bytes)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw std::runtime_error("cannot write " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

inline void write_image_atomic(const fs::path& path, const Frame& frame, int png_level = kDefaultPngLevel)
{
    fs::path tmp = path.parent_path() / (".tmp_" + path.filename().string());
    write_image(tmp, frame, png_level);
    fs::rename(tmp, path);
}

struct FrameFile {
    std::size_t number = 0;
    fs::path path;
};

/// Image files with all-digit stems, sorted by frame number.
inline std::vector<FrameFile> list_frames(const fs::path& dir)
{
    std::vector<FrameFile> frames;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file() || !is_supported_image(entry.path())) {
            continue;
        }
        const std::string stem = entry.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(),
                                         [](unsigned char ch) { return std::isdigit(ch); })) {
            continue;
        }
        frames.push_back(FrameFile{static_cast<std::size_t>(std::stoull(stem)), entry.path()});
    }
    std::sort(frames.begin(), frames.end(), [](const FrameFile& a, const FrameFile& b) {
        return a.number != b.number ? a.number < b.number : a.path < b.path;
    });
    return frames;
}

struct VideoSource {
    std::string id;
    std::string label; // "real" or "fake"
    fs::path dir;
};

/// Videos under <root>/real and <root>/fake, sorted by id.
inline std::vector<VideoSource> discover_videos(const fs::path& root)
{
    if (!fs::is_directory(root)) {
        throw ConfigError("input root " + root.string() + " is not a directory");
    }
    std::vector<VideoSource> videos;
    for (const char* label : {"real", "fake"}) {
        const fs::path sub = root / label;
        if (!fs::is_directory(sub)) {
            continue;
        }
        for (const auto& entry : fs::directory_iterator(sub)) {
            if (entry.is_directory()) {
                videos.push_back(VideoSource{entry.path().filename().string(), label, entry.path()});
            }
        }
    }
    std::sort(videos.begin(), videos.end(),
              [](const VideoSource& a, const VideoSource& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < videos.size(); ++i) {
        if (videos[i].id == videos[i - 1].id) {
            throw ConfigError("video id '" + videos[i].id + "' appears under both real/ and fake/");
        }
    }
    if (videos.empty()) {
        throw ConfigError("no videos found under " + root.string() + "/{real,fake}");
    }
    return videos;
}

inline nlohmann::json rect_to_json(const Rect& r) { return {r.row0, r.col0, r.row1, r.col1}; }

inline nlohmann::json provenance_to_json(const std::vector<std::optional<std::size_t>>& v)
{
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : v) {
        out.push_back(s ? nlohmann::json(*s) : nlohmann::json(nullptr));
    }
    return out;
}

/// Loads, crops and resizes a frame the way the dataset pipeline does.
/// Returns the frame and the crop rect actually used.
inline std::pair<Frame, Rect> prepare_frame(const fs::path& path, const std::optional<Rect>& bbox,
                                            const TallConfig& cfg)
{
    const Frame raw = read_image(path, cfg.channels);
    const Rect rect = bbox ? expand_bbox(*bbox, cfg.face_margin, raw.height(), raw.width())
                           : raw.bounds();
    return {resize_bilinear(crop(raw, rect), cfg.frame_side, cfg.frame_side), rect};
}

/// Mask for clip `clip` of `video_id`: drawn from the clip's mask substream,
/// which is disjoint from the sampling substream.
inline MaskSpec clip_mask(const TallConfig& cfg, const std::string& video_id, std::size_t clip)
{
    if (!cfg.mask_enabled) {
        return MaskSpec{};
    }
    auto stream = substream(RandomStream::for_clip(cfg.seed, video_id, clip), StreamPurpose::Mask);
    return draw_mask(cfg.frame_side, cfg.frame_side, cfg.mask_size, stream);
}

/// Random orders are reseeded per clip so each thumbnail gets its own shuffle.
inline OrderVariant clip_order(const TallConfig& cfg, const std::string& video_id, std::size_t clip)
{
    if (const auto* r = std::get_if<RandomOrder>(&cfg.order)) {
        auto stream =
            substream(RandomStream::for_clip(cfg.seed, video_id, clip), StreamPurpose::Order);
        return RandomOrder{mix_key(stream.key(), r->seed)};
    }
    return cfg.order;
}

struct DatasetOptions {
    fs::path input_root;
    std::optional<fs::path> bbox_file;
    fs::path output_root;
    TallConfig config;
    std::size_t jobs = 1;
};

struct DatasetResult {
    nlohmann::json manifest;
    fs::path manifest_path;
    std::string manifest_sha256;
    std::size_t thumbnails = 0;
    std::size_t videos_ok = 0;
    std::size_t videos_failed = 0;
    double seconds = 0.0;

    double thumbnails_per_second() const { return seconds > 0.0 ? thumbnails / seconds : 0.0; }
};

namespace detail {

struct VideoOutcome {
    nlohmann::json entry;
    std::size_t thumbnails = 0;
    bool ok = true;
};

inline VideoOutcome process_video(const VideoSource& video, const BBoxFile* bboxes,
                                  const DatasetOptions& opt)
{
    const TallConfig& cfg = opt.config;
    VideoOutcome out;
    nlohmann::json& e = out.entry;
    e["id"] = video.id;
    e["label"] = video.label;
    nlohmann::json warnings = nlohmann::json::array();
    const fs::path rel_dir = fs::path("thumbnails") / video.id;
    const fs::path out_dir = opt.output_root / rel_dir;
    std::vector<fs::path> written;

    try {
        const auto all_frames = list_frames(video.dir);
        e["frame_count"] = all_frames.size();

        // Candidate frames: with skip-frame, frames lacking a box are dropped
        // before sampling and clips are consecutive in the remaining list.
        std::vector<const FrameFile*> candidates;
        std::size_t skipped = 0;
        for (const auto& f : all_frames) {
            if (bboxes && cfg.missing_bbox == MissingBBoxPolicy::SkipFrame &&
                !bboxes->find(video.id, f.number)) {
                ++skipped;
                continue;
            }
            candidates.push_back(&f);
        }
        if (skipped > 0) {
            warnings.push_back(std::to_string(skipped) + " frames without a bounding box skipped");
        }

        SamplerConfig scfg = cfg.sampler;
        scfg.seed = cfg.seed;
        const auto clips = sample_clips(VideoMeta{candidates.size(), std::nullopt, video.id}, scfg);

        fs::create_directories(out_dir);
        // Only short videos produce overlapping clips; cache just those frames.
        std::map<std::size_t, std::size_t> uses;
        for (const auto& ci : clips) {
            for (std::size_t pos : ci.frame_indices) {
                ++uses[pos];
            }
        }
        std::map<std::size_t, std::pair<Frame, Rect>> cache;
        std::size_t fallback = 0;
        nlohmann::json clip_records = nlohmann::json::array();

        for (const auto& ci : clips) {
            std::vector<Frame> frames;
            frames.reserve(ci.frame_indices.size());
            nlohmann::json frame_names = nlohmann::json::array();
            nlohmann::json frame_numbers = nlohmann::json::array();
            nlohmann::json crops = nlohmann::json::array();
            for (std::size_t pos : ci.frame_indices) {
                const FrameFile& ff = *candidates[pos];
                auto it = cache.find(pos);
                std::pair<Frame, Rect> prepared;
                if (it != cache.end()) {
                    prepared = it->second;
                } else {
                    std::optional<Rect> box;
                    if (bboxes) {
                        box = bboxes->find(video.id, ff.number);
                        if (!box) {
                            ++fallback;
                        }
                    }
                    prepared = prepare_frame(ff.path, box, cfg);
                    if (uses[pos] > 1) {
                        cache.emplace(pos, prepared);
                    }
                }
                crops.push_back(rect_to_json(prepared.second));
                frames.push_back(std::move(prepared.first));
                frame_names.push_back(ff.path.filename().string());
                frame_numbers.push_back(ff.number);
            }

            const MaskSpec mask = clip_mask(cfg, video.id, ci.segment);
            const OrderVariant order = clip_order(cfg, video.id, ci.segment);
            const Clip clip = apply_mask(Clip(std::move(frames)), mask);
            const Thumbnail thumb = arrange(clip, cfg.layout, order, cfg.thumb_side);

            std::ostringstream name;
            name << "clip_" << std::setw(3) << std::setfill('0') << ci.segment << ".png";
            const fs::path rel = rel_dir / name.str();
            write_image_atomic(opt.output_root / rel, thumb.image, cfg.png_compression);
            written.push_back(opt.output_root / rel);

            nlohmann::json rec;
            rec["segment"] = ci.segment;
            rec["start"] = ci.start_frame;
            rec["frame_indices"] = ci.frame_indices;
            rec["frame_numbers"] = frame_numbers;
            rec["frames"] = frame_names;
            rec["crop_rects"] = crops;
            if (mask.enabled) {
                rec["mask"] = {{"center", {mask.center_row, mask.center_col}},
                               {"size", mask.size},
                               {"rect", rect_to_json(mask.effective_rect(cfg.frame_side,
                                                                         cfg.frame_side))}};
            } else {
                rec["mask"] = nullptr;
            }
            rec["layout"] = cfg.layout.name;
            rec["order"] = order_to_string(order);
            rec["slot_sources"] = provenance_to_json(thumb.slot_sources);
            rec["output"] = rel.generic_string();
            clip_records.push_back(std::move(rec));
        }
        if (fallback > 0) {
            warnings.push_back(std::to_string(fallback) +
                               " sampled frames without a bounding box used the full frame");
        }
        e["clips"] = std::move(clip_records);
        e["status"] = "ok";
        out.thumbnails = clips.size();
    } catch (const std::exception& ex) {
        std::error_code ec;
        for (const auto& p : written) {
            fs::remove(p, ec);
        }
        e["clips"] = nlohmann::json::array();
        e["status"] = "error";
        e["error"] = ex.what();
        if (!e.contains("frame_count")) {
            e["frame_count"] = 0;
        }
        out.ok = false;
        out.thumbnails = 0;
    }
    e["warnings"] = std::move(warnings);
    return out;
}

} // namespace detail

/// Converts every video under opt.input_root. Configuration problems throw
/// ConfigError before anything is written; per-video failures are recorded in
/// the manifest and the run continues.
inline DatasetResult run_dataset(const DatasetOptions& opt)
{
    const auto t0 = std::chrono::steady_clock::now();
    opt.config.validate();
    const auto videos = discover_videos(opt.input_root);
    std::optional<BBoxFile> bboxes;
    if (opt.bbox_file) {
        try {
            bboxes = BBoxFile::load(*opt.bbox_file);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    fs::create_directories(opt.output_root);

    std::vector<detail::VideoOutcome> outcomes(videos.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < videos.size(); i = next++) {
            outcomes[i] = detail::process_video(videos[i], bboxes ? &*bboxes : nullptr, opt);
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(opt.jobs, 1, videos.size());
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
    }

    DatasetResult result;
    nlohmann::json entries = nlohmann::json::array();
    for (auto& o : outcomes) {
        result.thumbnails += o.thumbnails;
        (o.ok ? result.videos_ok : result.videos_failed) += 1;
        entries.push_back(std::move(o.entry));
    }
    result.manifest = {{"version", kManifestVersion},
                       {"global_seed", opt.config.seed},
                       {"config", config_to_json(opt.config)},
                       {"videos", std::move(entries)}};
    const std::string text = result.manifest.dump(2) + "\n";
    result.manifest_path = opt.output_root / "manifest.json";
    write_file_atomic(result.manifest_path, text);
    result.manifest_sha256 = sha256_hex(text);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---------------------------------------------------------------------------
// Single-clip preview

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PreviewResult {
    Thumbnail thumbnail;
    MaskSpec mask;
    nlohmann::json sidecar;
};

/// Assembles one thumbnail from a directory holding exactly clip_len frames.
/// Writes `output` and `<output>.json` (mask rect, slot provenance).
inline PreviewResult run_preview(const fs::path& clip_dir, const TallConfig& cfg,
                                 const fs::path& output)
{
    cfg.validate();
    if (!fs::is_directory(clip_dir)) {
        throw UsageError(clip_dir.string() + " is not a directory");
    }
    const auto files = list_frames(clip_dir);
    if (files.size() != cfg.sampler.clip_len) {
        throw UsageError("preview needs exactly " + std::to_string(cfg.sampler.clip_len) +
                         " frames in " + clip_dir.string() + ", found " +
                         std::to_string(files.size()));
    }
    const std::string id = clip_dir.filename().empty() ? clip_dir.parent_path().filename().string()
                                                       : clip_dir.filename().string();
    std::vector<Frame> frames;
    nlohmann::json names = nlohmann::json::array();
    for (const auto& f : files) {
        frames.push_back(prepare_frame(f.path, std::nullopt, cfg).first);
        names.push_back(f.path.filename().string());
    }
    PreviewResult r;
    r.mask = clip_mask(cfg, id, 0);
    const OrderVariant order = clip_order(cfg, id, 0);
    r.thumbnail = arrange(apply_mask(Clip(std::move(frames)), r.mask), cfg.layout, order,
                          cfg.thumb_side);

    r.sidecar = {{"frames", names},
                 {"layout", layout_to_json(cfg.layout)},
                 {"order", order_to_string(order)},
                 {"thumb_side", cfg.thumb_side},
                 {"frame_side", cfg.frame_side},
                 {"slot_sources", provenance_to_json(r.thumbnail.slot_sources)},
                 {"provenance_grid", provenance_to_json(r.thumbnail.provenance_grid)}};
    if (r.mask.enabled) {
        r.sidecar["mask"] = {{"center", {r.mask.center_row, r.mask.center_col}},
                             {"size", r.mask.size},
                             {"rect", rect_to_json(r.mask.effective_rect(cfg.frame_side,
                                                                         cfg.frame_side))}};
    }
    if (output.has_parent_path()) {
        fs::create_directories(output.parent_path());
    }
    write_image(output, r.thumbnail.image, cfg.png_compression);
    fs::path sidecar = output;
    sidecar += ".json";
    write_file_atomic(sidecar, r.sidecar.dump(2) + "\n");
    return r;
}

} // namespace tall
