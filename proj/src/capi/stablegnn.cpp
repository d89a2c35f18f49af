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

#include <stablegnn/stablegnn.h>

#include "graph/graph.hpp"
#include "report/report.hpp"
#include "train/experiment.hpp"
#include "train/snapshot.hpp"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

struct sgnn_dataset
{
    sgnn::graph::Dataset value;
};

struct sgnn_config
{
    sgnn::train::TrainConfig value;
};

struct sgnn_model
{
    sgnn::train::Model value;
};

namespace {

thread_local std::string last_error;

auto fail(sgnn_status s, const std::string& what) -> sgnn_status
{
    last_error = what;
    return s;
}

// Runs f, mapping the exception hierarchy onto status codes.
template <typename F>
auto guarded(F&& f) -> sgnn_status
{
    try {
        f();
        last_error.clear();
        return SGNN_OK;
    } catch (const sgnn::ShapeError& e) {
        return fail(SGNN_ERR_SHAPE, e.what());
    } catch (const sgnn::ParseError& e) {
        return fail(SGNN_ERR_PARSE, e.what());
    } catch (const sgnn::ParameterError& e) {
        return fail(SGNN_ERR_PARAMETER, e.what());
    } catch (const sgnn::NumericError& e) {
        return fail(SGNN_ERR_NUMERIC, e.what());
    } catch (const sgnn::IoError& e) {
        return fail(SGNN_ERR_IO, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(SGNN_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(SGNN_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(SGNN_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(SGNN_ERR_INTERNAL, "unknown error");
    }
}

auto null_argument(const char* name) -> sgnn_status
{
    return fail(SGNN_ERR_ARGUMENT, std::string { "argument '" } + name + "' is null");
}

auto copy_string(const std::string& s) -> char*
{
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc {};
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void to_c(const sgnn::train::Metrics& m, sgnn_metrics* out)
{
    out->accuracy = m.accuracy;
    out->f1 = m.f1;
    out->has_auc = m.auc ? 1 : 0;
    out->auc = m.auc.value_or(0.0);
}

} // namespace

#define SGNN_REQUIRE(p)               \
    do {                              \
        if ((p) == nullptr) {         \
            return null_argument(#p); \
        }                             \
    } while (0)

extern "C" {

const char* sgnn_version(void)
{
    return "0.1.0";
}

const char* sgnn_last_error(void)
{
    return last_error.c_str();
}

const char* sgnn_status_name(sgnn_status status)
{
    switch (status) {
    case SGNN_OK:
        return "ok";
    case SGNN_ERR_ARGUMENT:
        return "invalid argument";
    case SGNN_ERR_SHAPE:
        return "shape error";
    case SGNN_ERR_PARAMETER:
        return "parameter error";
    case SGNN_ERR_NUMERIC:
        return "numeric error";
    case SGNN_ERR_IO:
        return "i/o error";
    case SGNN_ERR_PARSE:
        return "parse error";
    case SGNN_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

void sgnn_string_free(char* s)
{
    std::free(s);
}

sgnn_status sgnn_dataset_generate(double mu, size_t n, uint64_t seed, const char* split,
                                  sgnn_dataset** out)
{
    SGNN_REQUIRE(split);
    SGNN_REQUIRE(out);
    *out = nullptr;
    sgnn::graph::Split s {};
    try {
        s = sgnn::graph::parse_split(split);
    } catch (const std::exception& e) {
        return fail(SGNN_ERR_ARGUMENT, e.what());
    }
    return guarded([&] {
        *out = new sgnn_dataset { sgnn::graph::generate_dataset(mu, n, seed, s) };
    });
}

sgnn_status sgnn_dataset_load(const char* path, sgnn_dataset** out)
{
    SGNN_REQUIRE(path);
    SGNN_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new sgnn_dataset { sgnn::graph::load_dataset(path) }; });
}

sgnn_status sgnn_dataset_save(const sgnn_dataset* d, const char* path)
{
    SGNN_REQUIRE(d);
    SGNN_REQUIRE(path);
    return guarded([&] { sgnn::graph::save_dataset(d->value, path); });
}

sgnn_status sgnn_dataset_stats_get(const sgnn_dataset* d, sgnn_dataset_stats* out)
{
    SGNN_REQUIRE(d);
    SGNN_REQUIRE(out);
    return guarded([&] {
        const auto s = sgnn::graph::summarize(d->value);
        out->graphs = s.graphs;
        out->positives = s.positives;
        out->positives_with_star = s.positives_with_star;
        out->star_rate = s.star_rate;
        out->mean_nodes = s.mean_nodes;
        out->mu = d->value.mu;
        out->seed = d->value.seed;
    });
}

void sgnn_dataset_free(sgnn_dataset* d)
{
    delete d;
}

sgnn_status sgnn_config_default(sgnn_config** out)
{
    SGNN_REQUIRE(out);
    return guarded([&] { *out = new sgnn_config {}; });
}

sgnn_status sgnn_config_parse(const char* text, sgnn_config** out)
{
    SGNN_REQUIRE(text);
    SGNN_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new sgnn_config { sgnn::train::parse_config(text) }; });
}

sgnn_status sgnn_config_load(const char* path, sgnn_config** out)
{
    SGNN_REQUIRE(path);
    SGNN_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new sgnn_config { sgnn::train::load_config(path) }; });
}

sgnn_status sgnn_config_set(sgnn_config* c, const char* key, const char* value)
{
    SGNN_REQUIRE(c);
    SGNN_REQUIRE(key);
    SGNN_REQUIRE(value);
    return guarded([&] { c->value.set(key, value); });
}

sgnn_status sgnn_config_validate(const sgnn_config* c)
{
    SGNN_REQUIRE(c);
    return guarded([&] { c->value.validate(); });
}

sgnn_status sgnn_config_to_string(const sgnn_config* c, char** out)
{
    SGNN_REQUIRE(c);
    SGNN_REQUIRE(out);
    return guarded([&] { *out = copy_string(c->value.to_text()); });
}

void sgnn_config_free(sgnn_config* c)
{
    delete c;
}

sgnn_status sgnn_train(const sgnn_config* c, const sgnn_dataset* train,
                       const sgnn_dataset* val, sgnn_model** model, char** history_csv)
{
    SGNN_REQUIRE(c);
    SGNN_REQUIRE(train);
    SGNN_REQUIRE(val);
    SGNN_REQUIRE(model);
    *model = nullptr;
    return guarded([&] {
        auto r = sgnn::train::train(c->value, train->value, val->value);
        char* csv = history_csv != nullptr
                        ? copy_string(sgnn::train::history_csv(r.history))
                        : nullptr;
        *model = new sgnn_model { std::move(r.model) };
        if (history_csv != nullptr) {
            *history_csv = csv;
        }
    });
}

sgnn_status sgnn_model_save(const sgnn_model* m, const char* path)
{
    SGNN_REQUIRE(m);
    SGNN_REQUIRE(path);
    return guarded([&] { sgnn::train::save_model(m->value, path); });
}

sgnn_status sgnn_model_load(const char* path, sgnn_model** out)
{
    SGNN_REQUIRE(path);
    SGNN_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new sgnn_model { sgnn::train::load_model(path) }; });
}

sgnn_status sgnn_model_evaluate(sgnn_model* m, const sgnn_dataset* d, sgnn_metrics* out)
{
    SGNN_REQUIRE(m);
    SGNN_REQUIRE(d);
    SGNN_REQUIRE(out);
    return guarded([&] { to_c(sgnn::train::evaluate(m->value, d->value), out); });
}

void sgnn_model_free(sgnn_model* m)
{
    delete m;
}

sgnn_status sgnn_experiment_run(const sgnn_experiment_options* options,
                                char** manifest_json)
{
    SGNN_REQUIRE(options);
    SGNN_REQUIRE(options->config);
    SGNN_REQUIRE(options->train_path);
    SGNN_REQUIRE(options->val_path);
    SGNN_REQUIRE(options->out_dir);
    return guarded([&] {
        sgnn::train::ExperimentOptions o;
        o.config = options->config->value;
        o.train_path = options->train_path;
        o.val_path = options->val_path;
        if (options->test_path != nullptr) {
            o.test_path = options->test_path;
        }
        o.out_dir = options->out_dir;
        o.runs = options->runs;
        o.jobs = options->jobs;
        const auto r = sgnn::train::run_experiment(o);
        if (manifest_json != nullptr) {
            *manifest_json = copy_string(r.manifest);
        }
    });
}

sgnn_status sgnn_report(const char* const* manifests, size_t count, char** csv,
                        char** text)
{
    SGNN_REQUIRE(manifests);
    SGNN_REQUIRE(csv);
    SGNN_REQUIRE(text);
    for (size_t i = 0; i < count; ++i) {
        if (manifests[i] == nullptr) {
            return null_argument("manifests[i]");
        }
    }
    return guarded([&] {
        const auto t = sgnn::report::build_report({ manifests, manifests + count });
        char* c = copy_string(t.csv);
        try {
            *text = copy_string(t.text);
        } catch (...) {
            std::free(c);
            throw;
        }
        *csv = c;
    });
}

} // extern "C"
