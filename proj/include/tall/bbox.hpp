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
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pixel_core.hpp"

namespace tall {

/// Face boxes keyed by (video id, frame number). Text format, one record per
/// line: `video_id frame row0 col0 row1 col1`, whitespace or comma separated,
/// `#` starts a comment. When a frame has several boxes the largest is kept.
class BBoxFile {
public:
    static BBoxFile parse(std::istream& in, const std::string& source = "<stream>")
    {
        BBoxFile out;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) {
                line.erase(hash);
            }
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream fields(line);
            std::string id;
            if (!(fields >> id)) {
                continue;
            }
            long long frame = -1;
            long long r0 = -1, c0 = -1, r1 = -1, c1 = -1;
            std::string extra;
            if (!(fields >> frame >> r0 >> c0 >> r1 >> c1) || (fields >> extra)) {
                throw std::invalid_argument(source + ":" + std::to_string(lineno) +
                                            ": expected 'video frame row0 col0 row1 col1'");
            }
            if (frame < 0 || r0 < 0 || c0 < 0 || r1 <= r0 || c1 <= c0) {
                throw std::invalid_argument(source + ":" + std::to_string(lineno) +
                                            ": degenerate or negative bounding box");
            }
            const Rect rect{static_cast<std::size_t>(r0), static_cast<std::size_t>(c0),
                            static_cast<std::size_t>(r1), static_cast<std::size_t>(c1)};
            auto& slot = out.boxes_[id][static_cast<std::size_t>(frame)];
            if (slot.empty() || rect.height() * rect.width() > slot.height() * slot.width()) {
                slot = rect;
            }
        }
        return out;
    }

    static BBoxFile load(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw std::invalid_argument("cannot open bbox file " + path.string());
        }
        return parse(in, path.string());
    }

    std::optional<Rect> find(const std::string& video, std::size_t frame) const
    {
        auto v = boxes_.find(video);
        if (v == boxes_.end()) {
            return std::nullopt;
        }
        auto f = v->second.find(frame);
        if (f == v->second.end()) {
            return std::nullopt;
        }
        return f->second;
    }

    std::size_t video_count() const { return boxes_.size(); }

private:
    std::map<std::string, std::map<std::size_t, Rect>> boxes_;
};

} // namespace tall
