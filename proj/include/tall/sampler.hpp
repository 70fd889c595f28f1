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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

namespace tall {

struct VideoMeta {
    std::size_t total_frames = 0;
    std::optional<double> fps;
    std::string id;
};

struct SamplerConfig {
    std::size_t num_clips = 8;
    std::size_t clip_len = 4;
    std::uint64_t seed = 0;
    bool allow_short = false;
};

struct ClipIndex {
    std::size_t segment = 0;
    std::size_t start_frame = 0;
    std::vector<std::size_t> frame_indices;

    friend bool operator==(const ClipIndex&, const ClipIndex&) = default;
};

class SamplingError : public std::runtime_error {
public:
    enum class Kind { VideoTooShort, SegmentTooShort };

    SamplingError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Dense sampling: split the video into num_clips segments of floor(T/N)
/// frames and draw clip_len consecutive frames at a uniform offset inside
/// each. Trailing T mod N frames are never sampled. Each clip draws from its
/// own stream keyed by (seed, video id, clip index).
inline std::vector<ClipIndex> sample_clips(const VideoMeta& meta, const SamplerConfig& cfg)
{
    if (cfg.num_clips == 0 || cfg.clip_len == 0) {
        throw std::invalid_argument("sample_clips: num_clips and clip_len must be positive");
    }
    const std::size_t total = meta.total_frames;
    const std::size_t t = cfg.clip_len;
    if (total < t) {
        throw SamplingError(SamplingError::Kind::VideoTooShort,
                            "video '" + meta.id + "' has " + std::to_string(total) +
                                " frames, fewer than clip length " + std::to_string(t));
    }
    const std::size_t seg_len = total / cfg.num_clips;
    if (seg_len < t && !cfg.allow_short) {
        throw SamplingError(SamplingError::Kind::SegmentTooShort,
                            "video '" + meta.id + "': segment length " + std::to_string(seg_len) +
                                " is shorter than clip length " + std::to_string(t));
    }

    std::vector<ClipIndex> clips;
    clips.reserve(cfg.num_clips);
    for (std::size_t i = 0; i < cfg.num_clips; ++i) {
        const std::size_t seg_start = i * seg_len;
        std::size_t start = 0;
        if (seg_len >= t) {
            auto stream = substream(RandomStream::for_clip(cfg.seed, meta.id, i),
                                    StreamPurpose::Sampling);
            start = seg_start + static_cast<std::size_t>(stream.uniform(seg_len - t + 1));
        } else {
            start = std::min(seg_start, total - t);
        }
        ClipIndex clip{i, start, {}};
        clip.frame_indices.reserve(t);
        for (std::size_t k = 0; k < t; ++k) {
            clip.frame_indices.push_back(start + k);
        }
        clips.push_back(std::move(clip));
    }
    return clips;
}

} // namespace tall
