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

// JSON run configuration shared by every subcommand.
//
//   {
//     "seed": 0,
//     "sampler":   {"num_clips": 8, "clip_len": 4, "allow_short": false},
//     "face":      {"margin": 0.3, "missing_bbox": "full-frame", "frame_side": 224},
//     "mask":      {"enabled": true, "size": 56},
//     "layout":    "compact_2x2"  or  {"name": .., "rows": .., "cols": .., "slots": [[r,c],..], "fill": 0},
//     "order":     "forward" | "reverse" | "random:<seed>" | "absence:<k>",
//     "thumbnail": {"side": 224, "channels": 3, "png_compression": 1},
//     "windows":   {"input_side": 224, "patch": 4, "windows": [14,14,14,7], "depths": [2,2,2,2]}
//   }
//
// Every key is optional; unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sampler.hpp"
#include "tall_transform.hpp"
#include "window_analysis.hpp"

namespace tall {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class MissingBBoxPolicy { FullFrame, SkipFrame };

inline std::string policy_name(MissingBBoxPolicy p)
{
    return p == MissingBBoxPolicy::FullFrame ? "full-frame" : "skip-frame";
}

inline MissingBBoxPolicy parse_policy(const std::string& s)
{
    if (s == "full-frame") return MissingBBoxPolicy::FullFrame;
    if (s == "skip-frame") return MissingBBoxPolicy::SkipFrame;
    throw ConfigError("missing_bbox must be 'full-frame' or 'skip-frame', got '" + s + "'");
}

struct TallConfig {
    std::uint64_t seed = 0;
    SamplerConfig sampler{};
    double face_margin = 0.3;
    MissingBBoxPolicy missing_bbox = MissingBBoxPolicy::FullFrame;
    std::size_t frame_side = kDefaultThumbSide;
    bool mask_enabled = true;
    std::size_t mask_size = kDefaultMaskSize;
    LayoutSpec layout = find_layout("compact_2x2");
    OrderVariant order = ForwardOrder{};
    std::size_t thumb_side = kDefaultThumbSide;
    std::size_t channels = 3;
    int png_compression = 1; // zlib level for written thumbnails
    SwinGeometry windows{};

    /// Cross-field checks. Throws ConfigError.
    void validate() const
    {
        if (sampler.num_clips == 0 || sampler.clip_len == 0) {
            throw ConfigError("sampler.num_clips and sampler.clip_len must be positive");
        }
        if (!(face_margin >= 0.0)) {
            throw ConfigError("face.margin must be non-negative");
        }
        if (frame_side == 0 || thumb_side == 0) {
            throw ConfigError("face.frame_side and thumbnail.side must be positive");
        }
        if (channels != 1 && channels != 3) {
            throw ConfigError("thumbnail.channels must be 1 or 3");
        }
        if (png_compression < 0 || png_compression > 9) {
            throw ConfigError("thumbnail.png_compression must be in [0, 9]");
        }
        try {
            layout.validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        if (layout.slots.size() != sampler.clip_len) {
            throw ConfigError("layout '" + layout.name + "' has " +
                              std::to_string(layout.slots.size()) + " slots but clip_len is " +
                              std::to_string(sampler.clip_len));
        }
        if (const auto* a = std::get_if<AbsenceOrder>(&order)) {
            if (a->keep_count < 1 || a->keep_count > sampler.clip_len) {
                throw ConfigError("absence order keep count must lie in [1, clip_len]");
            }
        }
    }
};

/// "forward", "reverse", "random:<seed>", "absence:<k>".
inline OrderVariant parse_order(const std::string& text)
{
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    auto number = [&](const char* what) -> std::uint64_t {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(arg, &used);
            if (used != arg.size()) {
                throw std::invalid_argument(arg);
            }
            return v;
        } catch (const std::exception&) {
            throw ConfigError("order '" + text + "': expected numeric " + what);
        }
    };
    if (kind == "forward" && arg.empty()) return ForwardOrder{};
    if (kind == "reverse" && arg.empty()) return ReverseOrder{};
    if (kind == "random") return RandomOrder{arg.empty() ? 0 : number("seed")};
    if (kind == "absence") return AbsenceOrder{static_cast<std::size_t>(number("keep count"))};
    throw ConfigError("unknown order '" + text + "'");
}

inline std::string order_to_string(const OrderVariant& order)
{
    if (const auto* r = std::get_if<RandomOrder>(&order)) return "random:" + std::to_string(r->seed);
    if (const auto* a = std::get_if<AbsenceOrder>(&order)) return "absence:" + std::to_string(a->keep_count);
    return order_name(order);
}

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& section,
                           std::initializer_list<const char*> known)
{
    if (!obj.is_object()) {
        throw ConfigError("'" + section + "' must be an object");
    }
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("unknown key '" + section + "." + key + "'");
        }
    }
}

template <typename T>
void read_key(const json& obj, const char* key, T& out)
{
    if (auto it = obj.find(key); it != obj.end()) {
        out = it->get<T>();
    }
}

inline LayoutSpec layout_from_json(const json& j)
{
    if (j.is_string()) {
        try {
            return find_layout(j.get<std::string>());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    reject_unknown(j, "layout", {"name", "rows", "cols", "slots", "fill"});
    LayoutSpec l;
    l.name = j.value("name", std::string("custom"));
    l.rows = j.at("rows").get<std::size_t>();
    l.cols = j.at("cols").get<std::size_t>();
    for (const auto& s : j.at("slots")) {
        if (!s.is_array() || s.size() != 2) {
            throw ConfigError("layout.slots entries must be [row, col] pairs");
        }
        l.slots.push_back(Cell{s[0].get<std::size_t>(), s[1].get<std::size_t>()});
    }
    l.fill_missing = j.value("fill", 0.0f);
    return l;
}

} // namespace detail

inline nlohmann::json layout_to_json(const LayoutSpec& l)
{
    nlohmann::json slots = nlohmann::json::array();
    for (const auto& s : l.slots) {
        slots.push_back({s.row, s.col});
    }
    return {{"name", l.name}, {"rows", l.rows}, {"cols", l.cols}, {"slots", slots},
            {"fill", l.fill_missing}};
}

inline TallConfig config_from_json(const nlohmann::json& j)
{
    using detail::read_key;
    using detail::reject_unknown;
    TallConfig cfg;
    try {
        reject_unknown(j, "config",
                       {"seed", "sampler", "face", "mask", "layout", "order", "thumbnail", "windows"});
        read_key(j, "seed", cfg.seed);
        if (auto it = j.find("sampler"); it != j.end()) {
            reject_unknown(*it, "sampler", {"num_clips", "clip_len", "allow_short"});
            read_key(*it, "num_clips", cfg.sampler.num_clips);
            read_key(*it, "clip_len", cfg.sampler.clip_len);
            read_key(*it, "allow_short", cfg.sampler.allow_short);
        }
        if (auto it = j.find("face"); it != j.end()) {
            reject_unknown(*it, "face", {"margin", "missing_bbox", "frame_side"});
            read_key(*it, "margin", cfg.face_margin);
            read_key(*it, "frame_side", cfg.frame_side);
            if (auto p = it->find("missing_bbox"); p != it->end()) {
                cfg.missing_bbox = parse_policy(p->get<std::string>());
            }
        }
        if (auto it = j.find("mask"); it != j.end()) {
            reject_unknown(*it, "mask", {"enabled", "size"});
            read_key(*it, "enabled", cfg.mask_enabled);
            read_key(*it, "size", cfg.mask_size);
        }
        if (auto it = j.find("layout"); it != j.end()) {
            cfg.layout = detail::layout_from_json(*it);
        }
        if (auto it = j.find("order"); it != j.end()) {
            cfg.order = parse_order(it->get<std::string>());
        }
        if (auto it = j.find("thumbnail"); it != j.end()) {
            reject_unknown(*it, "thumbnail", {"side", "channels", "png_compression"});
            read_key(*it, "side", cfg.thumb_side);
            read_key(*it, "channels", cfg.channels);
            read_key(*it, "png_compression", cfg.png_compression);
        }
        if (auto it = j.find("windows"); it != j.end()) {
            reject_unknown(*it, "windows", {"input_side", "patch", "windows", "depths"});
            read_key(*it, "input_side", cfg.windows.input_side);
            read_key(*it, "patch", cfg.windows.patch);
            read_key(*it, "windows", cfg.windows.windows);
            if (it->contains("windows") && !it->contains("depths")) {
                cfg.windows.depths.assign(cfg.windows.windows.size(), 2);
            }
            read_key(*it, "depths", cfg.windows.depths);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline TallConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

inline nlohmann::json config_to_json(const TallConfig& c)
{
    return {
        {"seed", c.seed},
        {"sampler",
         {{"num_clips", c.sampler.num_clips},
          {"clip_len", c.sampler.clip_len},
          {"allow_short", c.sampler.allow_short}}},
        {"face",
         {{"margin", c.face_margin},
          {"missing_bbox", policy_name(c.missing_bbox)},
          {"frame_side", c.frame_side}}},
        {"mask", {{"enabled", c.mask_enabled}, {"size", c.mask_size}}},
        {"layout", layout_to_json(c.layout)},
        {"order", order_to_string(c.order)},
        {"thumbnail", {{"side", c.thumb_side}, {"channels", c.channels}, {"png_compression", c.png_compression}}},
        {"windows",
         {{"input_side", c.windows.input_side},
          {"patch", c.windows.patch},
          {"windows", c.windows.windows},
          {"depths", c.windows.depths}}},
    };
}

} // namespace tall
