// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <string>
#include <vector>

namespace sgnn::report {

struct Table
{
    std::string csv;
    std::string text; // column-aligned
};

// One row per (training mu, backbone). With both a baseline and a stable
// manifest in a row, the table gains relative improvement columns,
// (stable - baseline) / baseline * 100. Throws ParseError on malformed JSON
// and ParameterError on manifests that cannot be compared.
auto build_report(const std::vector<std::string>& manifests) -> Table;

} // namespace sgnn::report
