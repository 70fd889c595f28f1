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

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>

namespace tall {

// Counter-based random streams. A stream is a 64-bit key; the k-th draw is a
// pure function of (key, k), so streams can be split and consumed in any order
// or on any thread without changing results.

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a; stable across platforms, unlike std::hash.
inline constexpr std::uint64_t stable_hash(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t mix_key(std::uint64_t key, std::uint64_t value)
{
    return splitmix64(key ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

class RandomStream {
public:
    constexpr explicit RandomStream(std::uint64_t key) : key_(key) {}

    /// Stream for clip `clip` of video `video_id` under a global seed.
    static RandomStream for_clip(std::uint64_t seed, std::string_view video_id, std::uint64_t clip)
    {
        return RandomStream(mix_key(mix_key(splitmix64(seed), stable_hash(video_id)), clip));
    }

    /// Independent child stream; the parent's counter is untouched.
    constexpr RandomStream substream(std::uint64_t purpose) const
    {
        return RandomStream(mix_key(key_, purpose));
    }

    constexpr std::uint64_t key() const { return key_; }
    constexpr std::uint64_t counter() const { return counter_; }

    constexpr std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

    /// Uniform integer in [0, bound). Rejection sampling keeps it unbiased.
    constexpr std::uint64_t uniform(std::uint64_t bound)
    {
        if (bound == 0) {
            throw std::invalid_argument("RandomStream::uniform: empty range");
        }
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v = next_u64();
        while (v >= limit) {
            v = next_u64();
        }
        return v % bound;
    }

    /// Uniform integer in [lo, hi].
    constexpr std::uint64_t uniform_between(std::uint64_t lo, std::uint64_t hi)
    {
        if (hi < lo) {
            throw std::invalid_argument("RandomStream::uniform_between: hi < lo");
        }
        if (hi - lo == std::numeric_limits<std::uint64_t>::max()) {
            return next_u64();
        }
        return lo + uniform(hi - lo + 1);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Purposes for substreams derived from a clip stream.
enum class StreamPurpose : std::uint64_t { Sampling = 0, Mask = 1, Order = 2 };

inline RandomStream substream(const RandomStream& s, StreamPurpose p)
{
    return s.substream(static_cast<std::uint64_t>(p));
}

} // namespace tall
