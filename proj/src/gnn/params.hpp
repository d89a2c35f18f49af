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

#include "tensor/tape.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sgnn {

struct Parameter
{
    std::string name;
    Matrix value;
    // Buffers (e.g. batch-norm running statistics) are stored alongside the
    // weights so snapshots are complete, but never receive gradients.
    bool trainable = true;
};

class ParameterStore
{
public:
    auto add(std::string name, Matrix value, bool trainable = true) -> std::size_t;

    [[nodiscard]] auto size() const noexcept -> std::size_t
    {
        return params_.size();
    }
    [[nodiscard]] auto operator[](std::size_t i) const -> const Parameter&
    {
        return params_.at(i);
    }
    auto operator[](std::size_t i) -> Parameter& { return params_.at(i); }
    [[nodiscard]] auto find(const std::string& name) const -> std::optional<std::size_t>;

    [[nodiscard]] auto begin() const { return params_.begin(); }
    [[nodiscard]] auto end() const { return params_.end(); }

    // FNV-1a over names and raw values; used to assert that a code path left
    // the parameters untouched.
    [[nodiscard]] auto fingerprint() const -> std::uint64_t;

private:
    std::vector<Parameter> params_;
};

// Lazily places trainable parameters on a tape for one forward pass and
// collects their gradients afterwards.
class Binding
{
public:
    Binding(Tape& tape, const ParameterStore& store);

    auto var(std::size_t index) -> Var;
    [[nodiscard]] auto tape() -> Tape& { return tape_; }

    // One entry per parameter; empty for buffers and unused parameters.
    [[nodiscard]] auto gradients() const -> std::vector<Matrix>;

private:
    Tape& tape_;
    const ParameterStore& store_;
    std::vector<std::optional<Var>> vars_;
};

} // namespace sgnn
