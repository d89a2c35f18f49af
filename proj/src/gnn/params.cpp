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

#include "params.hpp"

#include <cstring>

namespace sgnn {

auto ParameterStore::add(std::string name, Matrix value, bool trainable)
    -> std::size_t
{
    if (find(name)) {
        throw ParameterError { "duplicate parameter '" + name + "'" };
    }
    params_.push_back(Parameter { std::move(name), std::move(value), trainable });
    return params_.size() - 1;
}

auto ParameterStore::find(const std::string& name) const
    -> std::optional<std::size_t>
{
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

auto ParameterStore::fingerprint() const -> std::uint64_t
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const Parameter& p : params_) {
        feed(p.name.data(), p.name.size());
        feed(p.value.data(), static_cast<std::size_t>(p.value.size()) * sizeof(double));
    }
    return h;
}

Binding::Binding(Tape& tape, const ParameterStore& store)
  : tape_ { tape }, store_ { store }, vars_(store.size())
{}

auto Binding::var(std::size_t index) -> Var
{
    auto& slot = vars_.at(index);
    if (!slot) {
        const Parameter& p = store_[index];
        slot = p.trainable ? tape_.variable(p.value) : tape_.constant(p.value);
    }
    return *slot;
}

auto Binding::gradients() const -> std::vector<Matrix>
{
    std::vector<Matrix> out(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] && store_[i].trainable) {
            out[i] = tape_.grad(*vars_[i]);
        }
    }
    return out;
}

} // namespace sgnn
