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

#include <Eigen/Dense>

#include <string>

namespace sgnn {

// Dense 64-bit matrix, row-major so that a stack of equally sized blocks
// (one per graph) can be reinterpreted without copying.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using Index = Eigen::Index;

inline auto shape_string(Index rows, Index cols) -> std::string
{
    return std::to_string(rows) + "x" + std::to_string(cols);
}

inline auto shape_string(const Matrix& m) -> std::string
{
    return shape_string(m.rows(), m.cols());
}

} // namespace sgnn
