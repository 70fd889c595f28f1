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

#include <cstdio>
#include <sstream>

#include <gtest/gtest.h>
#include <jpeglib.h>

#include "synthetic.hpp"
#include "tall/bbox.hpp"
#include "tall/config.hpp"
#include "tall/dataset.hpp"
#include "tall/image_io.hpp"

using namespace tall;
namespace fs = std::filesystem;

namespace {

void write_test_jpeg(const fs::path& path, std::size_t h, std::size_t w)
{
    std::FILE* f = std::fopen(path.c_str(), "wb");
    ASSERT_NE(f, nullptr);
    jpeg_compress_struct cinfo{};
    jpeg_error_mgr err{};
    cinfo.err = jpeg_std_error(&err);
    jpeg_create_compress(&cinfo);
    jpeg_stdio_dest(&cinfo, f);
    cinfo.image_width = static_cast<JDIMENSION>(w);
    cinfo.image_height = static_cast<JDIMENSION>(h);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, 95, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    std::vector<unsigned char> row(w * 3, 128);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW r = row.data();
        jpeg_write_scanlines(&cinfo, &r, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::fclose(f);
}

TallConfig small_config()
{
    TallConfig cfg;
    cfg.frame_side = 64;
    cfg.thumb_side = 64;
    cfg.mask_size = 16;
    return cfg;
}

} // namespace

TEST(Config, DefaultsMatchPipelineSettings)
{
    const TallConfig cfg = config_from_json(nlohmann::json::object());
    EXPECT_EQ(cfg.sampler.num_clips, 8u);
    EXPECT_EQ(cfg.sampler.clip_len, 4u);
    EXPECT_DOUBLE_EQ(cfg.face_margin, 0.3);
    EXPECT_EQ(cfg.thumb_side, 224u);
    EXPECT_EQ(cfg.mask_size, 56u);
    EXPECT_EQ(cfg.layout.name, "compact_2x2");
    EXPECT_EQ(cfg.windows.windows, (std::vector<std::size_t>{14, 14, 14, 7}));
    EXPECT_EQ(cfg.missing_bbox, MissingBBoxPolicy::FullFrame);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, ParsesSectionsAndRejectsUnknownKeys)
{
    const auto j = nlohmann::json::parse(R"({
        "seed": 9,
        "sampler": {"num_clips": 4, "clip_len": 4, "allow_short": true},
        "mask": {"enabled": false},
        "layout": "strip_1x4",
        "order": "absence:2",
        "windows": {"windows": [7, 7, 7, 7]}
    })");
    const TallConfig cfg = config_from_json(j);
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_TRUE(cfg.sampler.allow_short);
    EXPECT_FALSE(cfg.mask_enabled);
    EXPECT_EQ(cfg.layout.name, "strip_1x4");
    EXPECT_EQ(std::get<AbsenceOrder>(cfg.order).keep_count, 2u);
    EXPECT_EQ(cfg.windows.depths.size(), 4u);
    EXPECT_NO_THROW(cfg.validate());

    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"sampler": {"clips": 3}})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"bogus": 1})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"layout": "hexagon"})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"sampler": {"num_clips": "x"}})")), ConfigError);
    EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"thumbnail": {"png_compression": 12}})")).validate(),
                 ConfigError);
}

TEST(Config, RoundTripsThroughJson)
{
    TallConfig cfg;
    cfg.seed = 77;
    cfg.order = RandomOrder{12};
    cfg.layout = LayoutSpec{"custom", 3, 3, {{0, 0}, {1, 1}, {2, 2}, {0, 2}}, 0.5f};
    const TallConfig back = config_from_json(config_to_json(cfg));
    EXPECT_EQ(config_to_json(back), config_to_json(cfg));
    EXPECT_EQ(back.layout.slots, cfg.layout.slots);
}

TEST(Config, SlotCountMustMatchClipLength)
{
    TallConfig cfg;
    cfg.layout = LayoutSpec{"three", 2, 2, {{0, 0}, {0, 1}, {1, 0}}, 0.0f};
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.layout = find_layout("strip_1x4");
    EXPECT_NO_THROW(cfg.validate());
    cfg.order = AbsenceOrder{5};
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Config, ParseOrder)
{
    EXPECT_TRUE(std::holds_alternative<ForwardOrder>(parse_order("forward")));
    EXPECT_TRUE(std::holds_alternative<ReverseOrder>(parse_order("reverse")));
    EXPECT_EQ(std::get<RandomOrder>(parse_order("random:42")).seed, 42u);
    EXPECT_EQ(std::get<AbsenceOrder>(parse_order("absence:3")).keep_count, 3u);
    EXPECT_THROW(parse_order("absence:x"), ConfigError);
    EXPECT_THROW(parse_order("sideways"), ConfigError);
    EXPECT_THROW(parse_order("forward:1"), ConfigError);
}

TEST(BBoxFile, ParsesRecords)
{
    std::istringstream in("# header\n"
                          "vid_a 0 10 20 30 40\n"
                          "vid_a,1,0,0,5,5   # trailing comment\n"
                          "vid_a 1 0 0 50 50\n" // larger box wins
                          "vid_a 1 0 0 2 2\n"
                          "\n"
                          "vid_b 7 1 1 2 2\n");
    const auto b = BBoxFile::parse(in);
    EXPECT_EQ(b.video_count(), 2u);
    EXPECT_EQ(*b.find("vid_a", 0), (Rect{10, 20, 30, 40}));
    EXPECT_EQ(*b.find("vid_a", 1), (Rect{0, 0, 50, 50}));
    EXPECT_FALSE(b.find("vid_a", 2));
    EXPECT_FALSE(b.find("vid_c", 0));
}

TEST(BBoxFile, RejectsMalformedLines)
{
    std::istringstream degenerate("v 0 10 10 10 20\n");
    EXPECT_THROW(BBoxFile::parse(degenerate), std::invalid_argument);
    std::istringstream short_line("v 0 1 2 3\n");
    EXPECT_THROW(BBoxFile::parse(short_line), std::invalid_argument);
    std::istringstream extra("v 0 1 2 3 4 5\n");
    EXPECT_THROW(BBoxFile::parse(extra), std::invalid_argument);
}

TEST(ImageIo, PngAndPnmRoundTrip)
{
    const fs::path dir = synthetic::fresh_dir("imageio");
    const Frame f = synthetic::frame(13, 17, 2, 1);
    for (const char* name : {"a.png", "a.ppm"}) {
        write_image(dir / name, f);
        const Frame back = read_image(dir / name, 3);
        ASSERT_TRUE(back.same_shape(f));
        for (std::size_t i = 0; i < f.data().size(); ++i) {
            ASSERT_EQ(to_u8(back.data()[i]), to_u8(f.data()[i]));
        }
    }
    Frame gray(1, 5, 4, 0.25f);
    write_image(dir / "g.pgm", gray);
    write_image(dir / "g.png", gray);
    EXPECT_EQ(read_image(dir / "g.pgm", 1).height(), 5u);
    EXPECT_EQ(read_image(dir / "g.png", 3).channels(), 3u);
    EXPECT_EQ(read_image(dir / "g.pgm", 3).at(2, 4, 3), from_u8(to_u8(0.25f)));
    EXPECT_THROW(read_image(dir / "missing.png"), ImageIoError);
    EXPECT_THROW(write_image(dir / "x.bmp", gray), ImageIoError);
    for (int level : {0, 1, 9}) {
        write_image(dir / "l.png", f, level);
        const Frame back = read_image(dir / "l.png");
        for (std::size_t i = 0; i < f.data().size(); ++i) {
            ASSERT_EQ(to_u8(back.data()[i]), to_u8(f.data()[i])) << "level " << level;
        }
    }
    fs::remove_all(dir);
}

TEST(ImageIo, ReadsJpeg)
{
    const fs::path dir = synthetic::fresh_dir("jpeg");
    write_test_jpeg(dir / "000001.jpg", 20, 30);
    const Frame f = read_image(dir / "000001.jpg");
    EXPECT_EQ(f.height(), 20u);
    EXPECT_EQ(f.width(), 30u);
    EXPECT_NEAR(f.at(1, 10, 10), 128 / 255.0, 3 / 255.0);
    std::ofstream(dir / "bad.jpg") << "not a jpeg";
    EXPECT_THROW(read_image(dir / "bad.jpg"), ImageIoError);
    fs::remove_all(dir);
}

TEST(Dataset, ToyCorpusCounts)
{
    const fs::path root = synthetic::fresh_dir("toy_in");
    const fs::path out = synthetic::fresh_dir("toy_out");
    synthetic::write_corpus(root, 2, 32);
    synthetic::write_bboxes(root / "boxes.txt", 2, 32);

    DatasetOptions opt{root, root / "boxes.txt", out, small_config(), 1};
    const auto r = run_dataset(opt);
    EXPECT_EQ(r.thumbnails, 16u);
    EXPECT_EQ(r.videos_failed, 0u);
    std::size_t records = 0;
    for (const auto& v : r.manifest["videos"]) {
        EXPECT_EQ(v["status"], "ok");
        EXPECT_EQ(v["frame_count"], 32);
        for (const auto& c : v["clips"]) {
            ++records;
            EXPECT_TRUE(fs::exists(out / c["output"].get<std::string>()));
            EXPECT_EQ(c["frame_indices"].size(), 4u);
        }
    }
    EXPECT_EQ(records, 16u);
    EXPECT_EQ(r.manifest["version"], kManifestVersion);
    EXPECT_EQ(read_image(out / r.manifest["videos"][0]["clips"][0]["output"].get<std::string>()).height(), 64u);

    // same inputs: identical manifest and thumbnails, regardless of worker count
    const fs::path out2 = synthetic::fresh_dir("toy_out2");
    DatasetOptions opt2 = opt;
    opt2.output_root = out2;
    opt2.jobs = 4;
    const auto r2 = run_dataset(opt2);
    EXPECT_EQ(r2.manifest_sha256, r.manifest_sha256);
    for (const auto& v : r.manifest["videos"])
        for (const auto& c : v["clips"]) {
            const auto rel = c["output"].get<std::string>();
            ASSERT_EQ(read_file(out / rel), read_file(out2 / rel));
        }
    fs::remove_all(root);
    fs::remove_all(out);
    fs::remove_all(out2);
}

TEST(Dataset, ManifestSufficesToRederiveThumbnails)
{
    const fs::path root = synthetic::fresh_dir("rederive_in");
    const fs::path out = synthetic::fresh_dir("rederive_out");
    synthetic::write_corpus(root, 2, 40);
    synthetic::write_bboxes(root / "boxes.txt", 2, 40);
    TallConfig cfg = small_config();
    cfg.order = RandomOrder{3};
    const auto r = run_dataset(DatasetOptions{root, root / "boxes.txt", out, cfg, 2});

    // Rebuild every thumbnail from the manifest and source frames alone.
    const TallConfig mcfg = config_from_json(r.manifest["config"]);
    for (const auto& v : r.manifest["videos"]) {
        const fs::path vdir = root / v["label"].get<std::string>() / v["id"].get<std::string>();
        for (const auto& c : v["clips"]) {
            std::vector<Frame> frames;
            for (std::size_t k = 0; k < c["frames"].size(); ++k) {
                const Frame raw = read_image(vdir / c["frames"][k].get<std::string>(), mcfg.channels);
                const auto rr = c["crop_rects"][k];
                const Rect rect{rr[0], rr[1], rr[2], rr[3]};
                frames.push_back(resize_bilinear(crop(raw, rect), mcfg.frame_side, mcfg.frame_side));
            }
            MaskSpec mask;
            if (!c["mask"].is_null()) {
                mask = MaskSpec{c["mask"]["center"][0], c["mask"]["center"][1], c["mask"]["size"], true};
            }
            const Thumbnail t = arrange(apply_mask(Clip(std::move(frames)), mask), mcfg.layout,
                                        parse_order(c["order"].get<std::string>()), mcfg.thumb_side);
            const Frame written = read_image(out / c["output"].get<std::string>(), mcfg.channels);
            ASSERT_TRUE(written.same_shape(t.image));
            for (std::size_t i = 0; i < written.data().size(); ++i) {
                ASSERT_EQ(to_u8(written.data()[i]), to_u8(t.image.data()[i]));
            }
        }
    }
    fs::remove_all(root);
    fs::remove_all(out);
}

TEST(Dataset, FailuresAreRecordedPerVideo)
{
    const fs::path root = synthetic::fresh_dir("fail_in");
    const fs::path out = synthetic::fresh_dir("fail_out");
    synthetic::write_corpus(root, 3, 32);
    // video_1: corrupt a frame that every clip layout must read (zero slack)
    std::ofstream(root / "fake" / "video_1" / synthetic::frame_name(5)) << "garbage";
    // video_2: too short
    for (std::size_t i = 8; i < 32; ++i) fs::remove(root / "real" / "video_2" / synthetic::frame_name(i));

    const auto r = run_dataset(DatasetOptions{root, std::nullopt, out, small_config(), 1});
    EXPECT_EQ(r.videos_ok, 1u);
    EXPECT_EQ(r.videos_failed, 2u);
    EXPECT_EQ(r.thumbnails, 8u);
    for (const auto& v : r.manifest["videos"]) {
        if (v["id"] == "video_0") {
            EXPECT_EQ(v["status"], "ok");
        } else {
            EXPECT_EQ(v["status"], "error");
            EXPECT_TRUE(v["clips"].empty());
            EXPECT_FALSE(v["error"].get<std::string>().empty());
        }
    }
    // no orphaned thumbnails for the failed video
    EXPECT_TRUE(fs::is_empty(out / "thumbnails" / "video_1"));
    fs::remove_all(root);
    fs::remove_all(out);
}

TEST(Dataset, MissingBoxPolicies)
{
    const fs::path root = synthetic::fresh_dir("policy_in");
    synthetic::write_corpus(root, 1, 40);
    {
        std::ofstream boxes(root / "boxes.txt");
        for (std::size_t i = 0; i < 40; i += 2) boxes << "video_0 " << i << " 10 10 50 60\n";
    }
    TallConfig cfg = small_config();
    cfg.sampler.num_clips = 4;
    cfg.sampler.clip_len = 4;

    const fs::path full_out = synthetic::fresh_dir("policy_full");
    const auto full = run_dataset(DatasetOptions{root, root / "boxes.txt", full_out, cfg, 1});
    const auto& fv = full.manifest["videos"][0];
    EXPECT_EQ(fv["status"], "ok");
    ASSERT_EQ(fv["warnings"].size(), 1u);
    for (const auto& c : fv["clips"])
        for (std::size_t k = 0; k < 4; ++k) {
            const std::size_t number = c["frame_numbers"][k];
            const auto rect = c["crop_rects"][k];
            if (number % 2 == 1) EXPECT_EQ(rect, nlohmann::json({0, 0, 72, 96}));
            else EXPECT_EQ(rect, nlohmann::json({0, 0, 62, 75}));
        }

    cfg.missing_bbox = MissingBBoxPolicy::SkipFrame;
    const fs::path skip_out = synthetic::fresh_dir("policy_skip");
    const auto skip = run_dataset(DatasetOptions{root, root / "boxes.txt", skip_out, cfg, 1});
    const auto& sv = skip.manifest["videos"][0];
    EXPECT_EQ(sv["status"], "ok");
    for (const auto& c : sv["clips"])
        for (const auto& n : c["frame_numbers"]) EXPECT_EQ(n.get<std::size_t>() % 2, 0u);

    fs::remove_all(root);
    fs::remove_all(full_out);
    fs::remove_all(skip_out);
}

TEST(Dataset, ConfigErrorsBeforeAnyWrite)
{
    const fs::path root = synthetic::fresh_dir("cfgerr_in");
    synthetic::write_corpus(root, 1, 16);
    const fs::path out = fs::temp_directory_path() / "tall_test_cfgerr_out_never_created";
    fs::remove_all(out);
    TallConfig cfg = small_config();
    cfg.layout = LayoutSpec{"three", 2, 2, {{0, 0}, {0, 1}, {1, 0}}, 0.0f};
    EXPECT_THROW(run_dataset(DatasetOptions{root, std::nullopt, out, cfg, 1}), ConfigError);
    EXPECT_FALSE(fs::exists(out));
    EXPECT_THROW(run_dataset(DatasetOptions{root / "nope", std::nullopt, out, small_config(), 1}), ConfigError);
    EXPECT_FALSE(fs::exists(out));
    fs::remove_all(root);
}

TEST(Preview, WritesThumbnailAndSidecar)
{
    const fs::path clip = synthetic::fresh_dir("preview_clip");
    for (std::size_t i = 0; i < 4; ++i) write_image(clip / synthetic::frame_name(i), synthetic::frame(50, 60, i, 4));
    const fs::path out = synthetic::fresh_dir("preview_out");

    TallConfig cfg;
    const auto fwd = run_preview(clip, cfg, out / "fwd.png");
    EXPECT_EQ(read_image(out / "fwd.png").height(), 224u);
    EXPECT_EQ(read_image(out / "fwd.png").width(), 224u);
    const auto side = nlohmann::json::parse(read_file(out / "fwd.png.json"));
    EXPECT_TRUE(side.contains("mask"));
    EXPECT_EQ(side["slot_sources"], nlohmann::json({0, 1, 2, 3}));

    cfg.order = ReverseOrder{};
    cfg.mask_enabled = false;
    run_preview(clip, cfg, out / "rev.png");
    const auto rside = nlohmann::json::parse(read_file(out / "rev.png.json"));
    EXPECT_EQ(rside["slot_sources"], nlohmann::json({3, 2, 1, 0}));
    EXPECT_FALSE(rside.contains("mask"));

    fs::remove(clip / synthetic::frame_name(3));
    EXPECT_THROW(run_preview(clip, TallConfig{}, out / "bad.png"), UsageError);
    fs::remove_all(clip);
    fs::remove_all(out);
}
