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

#include "tape.hpp"

#include <string>

namespace sgnn {

auto Var::value() const -> const Matrix&
{
    if (tape_ == nullptr) {
        throw ParameterError { "Var: use of an unbound variable" };
    }
    return tape_->value(*this);
}

auto Tape::push(Matrix value, bool requires_grad, Backward backward) -> Var
{
    if (backward_done_) {
        throw ParameterError { "Tape: cannot record after backward" };
    }
    nodes_.push_back(Node { std::move(value), Matrix {}, requires_grad, false,
                            std::move(backward) });
    return Var { this, nodes_.size() - 1 };
}

auto Tape::variable(Matrix value) -> Var
{
    return push(std::move(value), true, nullptr);
}

auto Tape::constant(Matrix value) -> Var
{
    return push(std::move(value), false, nullptr);
}

auto Tape::record(std::string_view op, Matrix value,
                  std::initializer_list<Var> parents, Backward backward) -> Var
{
    return record(op, std::move(value), std::vector<Var>(parents),
                  std::move(backward));
}

auto Tape::record(std::string_view op, Matrix value,
                  const std::vector<Var>& parents, Backward backward) -> Var
{
    if (!value.allFinite()) {
        throw NumericError { "non-finite value produced by " + std::string(op) };
    }
    bool needs = false;
    for (const Var& p : parents) {
        check_owned(p);
        needs = needs || nodes_[p.id()].requires_grad;
    }
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
}

void Tape::backward(Var loss)
{
    check_owned(loss);
    if (backward_done_) {
        throw ParameterError { "Tape: backward called twice" };
    }
    const Matrix& lv = nodes_[loss.id()].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw ShapeError { "backward: loss must be 1x1, got "
                           + shape_string(lv) };
    }
    backward_done_ = true;
    if (!nodes_[loss.id()].requires_grad) {
        return;
    }
    grad_ref(loss)(0, 0) = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.has_grad || !node.backward) {
            continue;
        }
        // The rule may accumulate into parents only (ids < i), so `node`
        // stays valid while it runs.
        node.backward(*this, node.grad);
    }
}

auto Tape::value(Var v) const -> const Matrix&
{
    check_owned(v);
    return nodes_[v.id()].value;
}

auto Tape::requires_grad(Var v) const -> bool
{
    check_owned(v);
    return nodes_[v.id()].requires_grad;
}

auto Tape::grad(Var v) const -> Matrix
{
    check_owned(v);
    const Node& node = nodes_[v.id()];
    if (!node.has_grad) {
        return Matrix::Zero(node.value.rows(), node.value.cols());
    }
    return node.grad;
}

auto Tape::grad_ref(Var v) -> Matrix&
{
    Node& node = nodes_[v.id()];
    if (!node.has_grad) {
        node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
        node.has_grad = true;
    }
    return node.grad;
}

void Tape::check_owned(Var v) const
{
    if (v.tape() != this || v.id() >= nodes_.size()) {
        throw ParameterError { "Tape: variable belongs to another tape" };
    }
}

} // namespace sgnn
