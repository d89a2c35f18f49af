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

#include "snapshot.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sgnn::train {

namespace {

constexpr const char* magic = "stablegnn-model";

class LineReader
{
public:
    explicit LineReader(const std::string& text) : in_ { text } {}

    auto next() -> std::string
    {
        std::string line;
        if (!std::getline(in_, line)) {
            throw ParseError { "unexpected end of model file", line_ + 1 };
        }
        ++line_;
        return line;
    }
    // "key value" line with an expected key.
    auto field(const std::string& key) -> std::string
    {
        const std::string line = next();
        const auto space = line.find(' ');
        if (space == std::string::npos || line.substr(0, space) != key) {
            fail("expected '" + key + " <value>'");
        }
        return line.substr(space + 1);
    }
    [[noreturn]] void fail(const std::string& what) const
    {
        throw ParseError { what, line_ };
    }
    [[nodiscard]] auto line() const -> std::size_t { return line_; }

private:
    std::istringstream in_;
    std::size_t line_ = 0;
};

template <typename T>
auto number(LineReader& r, const std::string& text) -> T
{
    T out {};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    if (ec != std::errc {} || ptr != end) {
        r.fail("malformed number '" + text + "'");
    }
    return out;
}

} // namespace

auto serialize_model(const Model& model) -> std::string
{
    const ModelSpec& s = model.spec();
    std::ostringstream out;
    char buf[64];
    out << magic << ' ' << snapshot_version << '\n';
    out << "variant " << to_string(s.variant) << '\n';
    out << "feature_dim " << s.feature_dim << '\n';
    out << "hidden " << s.hidden << '\n';
    out << "clusters " << s.clusters << '\n';
    out << "pool_layers " << s.pool_layers << '\n';
    out << "baseline_layers " << s.baseline_layers << '\n';
    std::snprintf(buf, sizeof buf, "%.17g", s.dropout);
    out << "dropout " << buf << '\n';
    out << "parameters " << model.parameters().size() << '\n';
    for (const Parameter& p : model.parameters()) {
        out << "param " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << '\n';
        for (Index i = 0; i < p.value.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", p.value.data()[i]);
            out << (i == 0 ? "" : " ") << buf;
        }
        out << '\n';
    }
    return out.str();
}

auto deserialize_model(const std::string& text) -> Model
{
    LineReader r { text };
    const std::string head = r.next();
    const std::string prefix = std::string { magic } + ' ';
    if (head.rfind(prefix, 0) != 0) {
        r.fail("not a model file");
    }
    if (number<int>(r, head.substr(prefix.size())) != snapshot_version) {
        r.fail("unsupported model file version '" + head.substr(prefix.size()) + "'");
    }
    ModelSpec s;
    try {
        s.variant = parse_variant(r.field("variant"));
    } catch (const ParameterError& e) {
        r.fail(e.what());
    }
    s.feature_dim = number<Index>(r, r.field("feature_dim"));
    s.hidden = number<Index>(r, r.field("hidden"));
    s.clusters = number<Index>(r, r.field("clusters"));
    s.pool_layers = number<std::size_t>(r, r.field("pool_layers"));
    s.baseline_layers = number<std::size_t>(r, r.field("baseline_layers"));
    s.dropout = number<double>(r, r.field("dropout"));
    const auto count = number<std::size_t>(r, r.field("parameters"));

    Model model { s, 0 };
    ParameterStore& store = model.parameters();
    if (count != store.size()) {
        r.fail("expected " + std::to_string(store.size()) + " parameters for this "
               "architecture, file has " + std::to_string(count));
    }
    for (std::size_t k = 0; k < count; ++k) {
        std::istringstream header { r.field("param") };
        std::string name;
        Index rows = 0;
        Index cols = 0;
        if (!(header >> name >> rows >> cols)) {
            r.fail("malformed parameter header");
        }
        const auto idx = store.find(name);
        if (!idx) {
            r.fail("unknown parameter '" + name + "'");
        }
        Matrix& value = store[*idx].value;
        if (value.rows() != rows || value.cols() != cols) {
            r.fail("parameter '" + name + "' has shape " + std::to_string(rows) + "x"
                   + std::to_string(cols) + ", expected " + shape_string(value));
        }
        std::istringstream values { r.next() };
        std::string tok;
        for (Index i = 0; i < value.size(); ++i) {
            if (!(values >> tok)) {
                r.fail("parameter '" + name + "' has too few values");
            }
            value.data()[i] = number<double>(r, tok);
        }
        if (values >> tok) {
            r.fail("parameter '" + name + "' has too many values");
        }
    }
    return model;
}

void save_model(const Model& model, const std::filesystem::path& path)
{
    std::ofstream out { path, std::ios::binary };
    if (!out) {
        throw IoError { "cannot write model '" + path.string() + "'" };
    }
    out << serialize_model(model);
    if (!out) {
        throw IoError { "failed writing model '" + path.string() + "'" };
    }
}

auto load_model(const std::filesystem::path& path) -> Model
{
    std::ifstream in { path, std::ios::binary };
    if (!in) {
        throw IoError { "cannot open model '" + path.string() + "'" };
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return deserialize_model(ss.str());
    } catch (const ParseError& e) {
        throw ParseError { path.string() + ": " + e.what() };
    }
}

} // namespace sgnn::train
