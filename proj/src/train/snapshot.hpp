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

#include "train/model.hpp"

#include <filesystem>
#include <string>

namespace sgnn::train {

inline constexpr int snapshot_version = 1;

// Text format: a versioned header, the model spec, then per parameter a
// "param <name> <rows> <cols>" line followed by one line of row-major values
// printed with round-trip precision.
auto serialize_model(const Model& model) -> std::string;
auto deserialize_model(const std::string& text) -> Model;

void save_model(const Model& model, const std::filesystem::path& path);
auto load_model(const std::filesystem::path& path) -> Model;

} // namespace sgnn::train
