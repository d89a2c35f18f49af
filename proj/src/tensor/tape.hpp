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

#include "errors.hpp"
#include "matrix.hpp"

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace sgnn {

class Tape;

// Handle to one node of a tape. Cheap to copy; only valid while the owning
// tape is alive.
class Var
{
public:
    Var() = default;

    [[nodiscard]] auto value() const -> const Matrix&;
    [[nodiscard]] auto rows() const -> Index { return value().rows(); }
    [[nodiscard]] auto cols() const -> Index { return value().cols(); }
    [[nodiscard]] auto tape() const noexcept -> Tape* { return tape_; }
    [[nodiscard]] auto id() const noexcept -> std::size_t { return id_; }
    [[nodiscard]] auto valid() const noexcept -> bool
    {
        return tape_ != nullptr;
    }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) noexcept : tape_ { tape }, id_ { id } {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Define-by-run reverse-mode record. Nodes are appended in evaluation order,
// which is already a topological order, so backward is a single reverse
// sweep. A tape belongs to one thread and supports exactly one backward pass.
class Tape
{
public:
    // Receives the gradient of the loss with respect to the node's value.
    using Backward = std::function<void(Tape&, const Matrix&)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    auto operator=(const Tape&) -> Tape& = delete;
    Tape(Tape&&) = delete;
    auto operator=(Tape&&) -> Tape& = delete;
    ~Tape() = default;

    // Leaf that receives a gradient.
    auto variable(Matrix value) -> Var;
    // Leaf treated as a constant.
    auto constant(Matrix value) -> Var;

    // Appends an op result. `backward` is kept only when some parent needs a
    // gradient. Throws NumericError when `value` holds NaN/Inf.
    auto record(std::string_view op, Matrix value,
                std::initializer_list<Var> parents, Backward backward) -> Var;
    auto record(std::string_view op, Matrix value,
                const std::vector<Var>& parents, Backward backward) -> Var;

    void backward(Var loss);

    [[nodiscard]] auto value(Var v) const -> const Matrix&;
    [[nodiscard]] auto requires_grad(Var v) const -> bool;
    // Gradient after `backward`; zeros when the node was not reached.
    [[nodiscard]] auto grad(Var v) const -> Matrix;

    // Zero-initialized gradient slot for accumulation inside a backward rule.
    auto grad_ref(Var v) -> Matrix&;

    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return nodes_.size();
    }

private:
    struct Node
    {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        bool has_grad = false;
        Backward backward;
    };

    auto push(Matrix value, bool requires_grad, Backward backward) -> Var;
    void check_owned(Var v) const;

    std::vector<Node> nodes_;
    bool backward_done_ = false;
};

} // namespace sgnn
