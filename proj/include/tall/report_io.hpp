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

#include <iomanip>
#include <sstream>
#include <string>

#include <json.hpp>

#include "window_analysis.hpp"

namespace tall {

inline std::string report_to_text(const PipelineReport& report)
{
    std::ostringstream os;
    os << "stage  grid     window  shift  merge  windows  crossing  multi_frame\n";
    for (const auto& s : report.stages) {
        std::ostringstream grid;
        grid << s.grid_height << "x" << s.grid_width;
        os << std::left << std::setw(7) << s.stage << std::setw(9) << grid.str() << std::setw(8)
           << s.window << std::setw(7) << s.shift << std::setw(7) << (s.merge_after ? "yes" : "no")
           << std::setw(9) << s.num_windows << std::setw(10) << s.num_crossing << std::fixed
           << std::setprecision(4) << s.multi_frame_fraction << "\n";
    }
    os << "full_mixing: " << (report.full_mixing ? "true" : "false") << "\n";
    return os.str();
}

inline nlohmann::json report_to_json(const PipelineReport& report)
{
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& s : report.stages) {
        stages.push_back({{"stage", s.stage},
                          {"grid", {s.grid_height, s.grid_width}},
                          {"window", s.window},
                          {"shift", s.shift},
                          {"merge_after", s.merge_after},
                          {"num_windows", s.num_windows},
                          {"num_crossing", s.num_crossing},
                          {"multi_frame_fraction", s.multi_frame_fraction}});
    }
    return {{"stages", stages}, {"full_mixing", report.full_mixing}};
}

} // namespace tall
