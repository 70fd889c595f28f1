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

// tall: thumbnail dataset conversion and window/complexity analysis.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 partial failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "tall/config.hpp"
#include "tall/dataset.hpp"
#include "tall/report_io.hpp"
#include "tall/window_analysis.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct CommonFlags {
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string output;
};

void add_common(CLI::App* cmd, CommonFlags& f, const std::string& output_help)
{
    cmd->add_option("--seed", f.seed, "Global seed (overrides config 'seed')");
    cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--output", f.output, output_help);
}

// Flags shared by dataset and preview; each overrides its config key.
struct TransformFlags {
    std::optional<std::size_t> num_clips;
    std::optional<std::size_t> clip_len;
    bool allow_short = false;
    std::optional<std::string> layout;
    std::optional<std::string> order;
    bool no_mask = false;
    std::optional<std::size_t> mask_size;
    std::optional<std::size_t> thumb_side;
    std::optional<int> png_level;
    std::optional<std::size_t> frame_side;
    std::optional<double> margin;
    std::optional<std::string> missing_bbox;
};

void add_transform(CLI::App* cmd, TransformFlags& f, bool sampling)
{
    if (sampling) {
        cmd->add_option("--num-clips", f.num_clips, "Clips per video (N)");
        cmd->add_option("--clip-len", f.clip_len, "Frames per clip (t)");
        cmd->add_flag("--allow-short", f.allow_short,
                      "Permit segments shorter than the clip length");
        cmd->add_option("--margin", f.margin, "Face crop margin per side, fraction of box size");
        cmd->add_option("--missing-bbox", f.missing_bbox, "full-frame or skip-frame")
            ->check(CLI::IsMember({"full-frame", "skip-frame"}));
    }
    cmd->add_option("--layout", f.layout, "Catalog layout name");
    cmd->add_option("--order", f.order, "forward | reverse | random:<seed> | absence:<k>");
    cmd->add_flag("--no-mask", f.no_mask, "Disable the fixed-position mask");
    cmd->add_option("--mask-size", f.mask_size, "Mask side in pixels");
    cmd->add_option("--thumb-side", f.thumb_side, "Thumbnail side in pixels");
    cmd->add_option("--png-level", f.png_level, "zlib level for written PNGs (0-9)");
    cmd->add_option("--frame-side", f.frame_side, "Side each frame is resized to before tiling");
}

tall::TallConfig resolve_config(const CommonFlags& c, const TransformFlags& t)
{
    tall::TallConfig cfg = c.config.empty() ? tall::TallConfig{} : tall::load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (t.num_clips) cfg.sampler.num_clips = *t.num_clips;
    if (t.clip_len) cfg.sampler.clip_len = *t.clip_len;
    if (t.allow_short) cfg.sampler.allow_short = true;
    if (t.layout) {
        try {
            cfg.layout = tall::find_layout(*t.layout);
        } catch (const std::invalid_argument& e) {
            throw tall::ConfigError(e.what());
        }
    }
    if (t.order) cfg.order = tall::parse_order(*t.order);
    if (t.no_mask) cfg.mask_enabled = false;
    if (t.mask_size) cfg.mask_size = *t.mask_size;
    if (t.thumb_side) cfg.thumb_side = *t.thumb_side;
    if (t.png_level) cfg.png_compression = *t.png_level;
    if (t.frame_side) cfg.frame_side = *t.frame_side;
    if (t.margin) cfg.face_margin = *t.margin;
    if (t.missing_bbox) cfg.missing_bbox = tall::parse_policy(*t.missing_bbox);
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"tall: thumbnail-layout dataset builder and window analysis"};
    app.require_subcommand(1);

    // dataset
    CommonFlags ds_common;
    TransformFlags ds_flags;
    std::string ds_input;
    std::string ds_bbox;
    std::size_t ds_jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* dataset = app.add_subcommand("dataset", "Convert frame directories into thumbnails");
    dataset->add_option("input_root", ds_input, "Directory with real/ and fake/ video folders")
        ->required();
    dataset->add_option("--bbox", ds_bbox, "Face box file (video frame row0 col0 row1 col1)");
    dataset->add_option("--jobs", ds_jobs, "Worker threads (outputs do not depend on it)")
        ->check(CLI::PositiveNumber);
    add_common(dataset, ds_common, "Output root directory");
    add_transform(dataset, ds_flags, true);

    // preview
    CommonFlags pv_common;
    TransformFlags pv_flags;
    std::string pv_dir;
    auto* preview = app.add_subcommand("preview", "Assemble one thumbnail from a clip directory");
    preview->add_option("clip_dir", pv_dir, "Directory holding exactly clip_len frames")->required();
    add_common(preview, pv_common, "Thumbnail path (sidecar written to <output>.json)");
    add_transform(preview, pv_flags, false);
    preview->add_option("--clip-len", pv_flags.clip_len, "Frames per clip (t)");

    // analyze-windows
    CommonFlags aw_common;
    std::string aw_format = "text";
    std::optional<std::string> aw_layout;
    std::vector<std::size_t> aw_windows;
    auto* analyze = app.add_subcommand("analyze-windows",
                                       "Cross-frame reachability through shifted-window stages");
    add_common(analyze, aw_common, "Report file (default: stdout)");
    analyze->add_option("--format", aw_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
    analyze->add_option("--layout", aw_layout, "Catalog layout for the initial token grid");
    analyze->add_option("--windows", aw_windows, "Per-stage window sizes, e.g. 14 14 14 7");

    // flops
    CommonFlags fl_common;
    std::string fl_kind;
    std::uint64_t fl_t = 0, fl_n = 0, fl_c = 0;
    std::optional<std::uint64_t> fl_p;
    auto* flops_cmd = app.add_subcommand("flops", "Attention complexity of ViT, Swin, ViViT, TALLSwin");
    flops_cmd->add_option("kind", fl_kind, "ViT | Swin | ViViT | TALLSwin | all")->required();
    flops_cmd->add_option("T", fl_t, "Frames")->required()->check(CLI::PositiveNumber);
    flops_cmd->add_option("N", fl_n, "Patches per frame")->required()->check(CLI::PositiveNumber);
    flops_cmd->add_option("C", fl_c, "Channels")->required()->check(CLI::PositiveNumber);
    flops_cmd->add_option("P", fl_p, "Patches per window (Swin, TALLSwin)")
        ->check(CLI::PositiveNumber);
    add_common(flops_cmd, fl_common, "Write the result to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    auto emit = [](const std::string& path, const std::string& text) {
        if (path.empty()) {
            std::cout << text;
        } else {
            tall::write_file_atomic(path, text);
        }
    };

    try {
        if (*dataset) {
            tall::DatasetOptions opt;
            opt.config = resolve_config(ds_common, ds_flags);
            opt.input_root = ds_input;
            if (!ds_bbox.empty()) opt.bbox_file = ds_bbox;
            opt.output_root = ds_common.output.empty() ? "tall_out" : ds_common.output;
            opt.jobs = ds_jobs;
            const auto r = tall::run_dataset(opt);
            std::cout << "videos: " << r.videos_ok << " ok, " << r.videos_failed << " failed\n"
                      << "thumbnails: " << r.thumbnails << "\n"
                      << "wall time: " << r.seconds << " s\n"
                      << "throughput: " << r.thumbnails_per_second() << " thumbnails/s\n"
                      << "manifest: " << r.manifest_path.string() << "\n"
                      << "manifest sha256: " << r.manifest_sha256 << "\n";
            for (const auto& v : r.manifest["videos"]) {
                if (v["status"] != "ok") {
                    std::cerr << "error: " << v["id"].get<std::string>() << ": "
                              << v["error"].get<std::string>() << "\n";
                }
            }
            return r.videos_failed > 0 ? kExitPartial : kExitOk;
        }
        if (*preview) {
            const auto cfg = resolve_config(pv_common, pv_flags);
            const std::string out = pv_common.output.empty() ? "preview.png" : pv_common.output;
            const auto r = tall::run_preview(pv_dir, cfg, out);
            std::cout << "wrote " << out << " (" << r.thumbnail.image.height() << "x"
                      << r.thumbnail.image.width() << ") and " << out << ".json\n";
            return kExitOk;
        }
        if (*analyze) {
            tall::TallConfig cfg = aw_common.config.empty() ? tall::TallConfig{}
                                                            : tall::load_config(aw_common.config);
            if (aw_layout) {
                try {
                    cfg.layout = tall::find_layout(*aw_layout);
                } catch (const std::invalid_argument& e) {
                    throw tall::ConfigError(e.what());
                }
            }
            if (!aw_windows.empty()) {
                cfg.windows.windows = aw_windows;
                cfg.windows.depths.assign(aw_windows.size(), 2);
            }
            cfg.validate();
            tall::PipelineReport report;
            try {
                report = tall::analyze_pipeline(tall::swin_stages(cfg.windows),
                                                tall::initial_token_grid(cfg.windows, cfg.layout));
            } catch (const std::invalid_argument& e) {
                throw tall::ConfigError(e.what());
            }
            emit(aw_common.output, aw_format == "json" ? tall::report_to_json(report).dump(2) + "\n"
                                                       : tall::report_to_text(report));
            return kExitOk;
        }
        if (*flops_cmd) {
            tall::ComplexityInput in{fl_t, fl_n, fl_c, fl_p.value_or(1)};
            std::ostringstream os;
            auto needs_p = [](tall::ModelKind k) {
                return k == tall::ModelKind::Swin || k == tall::ModelKind::TALLSwin;
            };
            if (fl_kind == "all") {
                for (auto k : {tall::ModelKind::ViT, tall::ModelKind::Swin, tall::ModelKind::ViViT,
                               tall::ModelKind::TALLSwin}) {
                    if (needs_p(k) && !fl_p) continue;
                    os << tall::model_kind_name(k) << " " << tall::flops(k, in).to_string() << "\n";
                }
            } else {
                tall::ModelKind kind;
                try {
                    kind = tall::parse_model_kind(fl_kind);
                } catch (const std::invalid_argument& e) {
                    throw tall::ConfigError(e.what());
                }
                if (needs_p(kind) && !fl_p) {
                    throw tall::ConfigError(tall::model_kind_name(kind) + " needs P (patches per window)");
                }
                os << tall::flops(kind, in).to_string() << "\n";
            }
            emit(fl_common.output, os.str());
            return kExitOk;
        }
    } catch (const tall::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const tall::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
