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

// Command-line driver: gen, train, eval, report.

#include <stablegnn/stablegnn.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

struct Failure
{
    int code;
};

// Throws Failure after printing the library's message.
void check(sgnn_status s, const std::string& context)
{
    if (s == SGNN_OK) {
        return;
    }
    std::cerr << "error: " << context << ": " << sgnn_last_error() << "\n";
    throw Failure { s == SGNN_ERR_ARGUMENT ? exit_usage : exit_runtime };
}

struct OwnedString
{
    char* p = nullptr;
    ~OwnedString() { sgnn_string_free(p); }
};

struct GenArgs
{
    double mu = 0.0;
    std::size_t n = 2000;
    std::uint64_t seed = 1;
    std::string split = "train";
    std::string out;
};

struct TrainArgs
{
    std::string config;
    std::string variant;
    std::string train;
    std::string val;
    std::string test;
    std::string out;
    std::size_t runs = 1;
    std::size_t jobs = 1;
    std::uint64_t seed = 1;
    bool seed_given = false;
    bool trajectory = false;
    std::vector<std::string> overrides;
};

struct EvalArgs
{
    std::string model;
    std::string data;
};

struct ReportArgs
{
    std::vector<std::string> manifests;
    std::string csv_out;
};

auto run_gen(const GenArgs& a) -> int
{
    sgnn_dataset* d = nullptr;
    check(sgnn_dataset_generate(a.mu, a.n, a.seed, a.split.c_str(), &d), "gen");
    struct Guard { sgnn_dataset* d; ~Guard() { sgnn_dataset_free(d); } } guard { d };
    check(sgnn_dataset_save(d, a.out.c_str()), "gen");
    sgnn_dataset_stats s {};
    check(sgnn_dataset_stats_get(d, &s), "gen");
    std::printf("wrote %zu graphs to %s\n", s.graphs, a.out.c_str());
    std::printf("positives %zu / %zu (%.4f)\n", s.positives, s.graphs,
                s.graphs ? static_cast<double>(s.positives) / static_cast<double>(s.graphs) : 0.0);
    std::printf("star co-occurrence among positives %.4f (mu %.4f)\n", s.star_rate, s.mu);
    std::printf("mean nodes %.2f\n", s.mean_nodes);
    return 0;
}

auto run_train(const TrainArgs& a) -> int
{
    sgnn_config* c = nullptr;
    if (a.config.empty()) {
        check(sgnn_config_default(&c), "train");
    } else {
        check(sgnn_config_load(a.config.c_str(), &c), "config");
    }
    struct Guard { sgnn_config* c; ~Guard() { sgnn_config_free(c); } } guard { c };
    if (!a.variant.empty()) {
        check(sgnn_config_set(c, "variant", a.variant.c_str()), "--variant");
    }
    if (a.seed_given) {
        check(sgnn_config_set(c, "seed", std::to_string(a.seed).c_str()), "--seed");
    }
    if (a.trajectory) {
        check(sgnn_config_set(c, "record_trajectories", "true"), "--trajectory");
    }
    for (const auto& kv : a.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
            return exit_usage;
        }
        const std::string key = kv.substr(0, eq);
        check(sgnn_config_set(c, key.c_str(), kv.substr(eq + 1).c_str()), "--set");
    }
    check(sgnn_config_validate(c), "config");

    sgnn_experiment_options o {};
    o.config = c;
    o.train_path = a.train.c_str();
    o.val_path = a.val.c_str();
    o.test_path = a.test.empty() ? nullptr : a.test.c_str();
    o.out_dir = a.out.c_str();
    o.runs = a.runs;
    o.jobs = a.jobs;
    OwnedString manifest;
    check(sgnn_experiment_run(&o, &manifest.p), "train");
    std::printf("wrote %s/manifest.json\n", a.out.c_str());
    return 0;
}

auto run_eval(const EvalArgs& a) -> int
{
    sgnn_model* m = nullptr;
    check(sgnn_model_load(a.model.c_str(), &m), "eval");
    struct MGuard { sgnn_model* m; ~MGuard() { sgnn_model_free(m); } } mg { m };
    sgnn_dataset* d = nullptr;
    check(sgnn_dataset_load(a.data.c_str(), &d), "eval");
    struct DGuard { sgnn_dataset* d; ~DGuard() { sgnn_dataset_free(d); } } dg { d };
    sgnn_metrics r {};
    check(sgnn_model_evaluate(m, d, &r), "eval");
    char auc[32] = "null";
    if (r.has_auc) {
        std::snprintf(auc, sizeof auc, "%.4f", r.auc);
    }
    std::printf("{\"accuracy\": %.4f, \"f1\": %.4f, \"auc\": %s}\n", r.accuracy, r.f1, auc);
    return 0;
}

auto read_file(const std::string& path) -> std::string
{
    std::ifstream in { path, std::ios::binary };
    if (!in) {
        std::cerr << "error: cannot open '" << path << "'\n";
        throw Failure { exit_runtime };
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

auto run_report(const ReportArgs& a) -> int
{
    std::vector<std::string> texts;
    for (const auto& p : a.manifests) {
        texts.push_back(read_file(p));
    }
    std::vector<const char*> ptrs;
    for (const auto& t : texts) {
        ptrs.push_back(t.c_str());
    }
    OwnedString csv;
    OwnedString text;
    check(sgnn_report(ptrs.data(), ptrs.size(), &csv.p, &text.p), "report");
    std::fputs(text.p, stdout);
    if (!a.csv_out.empty()) {
        std::ofstream out { a.csv_out, std::ios::binary };
        if (!(out << csv.p)) {
            std::cerr << "error: cannot write '" << a.csv_out << "'\n";
            return exit_runtime;
        }
    } else {
        std::fputs("\n", stdout);
        std::fputs(csv.p, stdout);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "StableGNN experiments: synthetic data, training, evaluation, reports" };
    app.set_version_flag("--version", std::string { sgnn_version() });
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate a synthetic motif dataset");
    g->add_option("--mu", gen.mu, "Star co-occurrence rate among positives")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    g->add_option("--n", gen.n, "Number of graphs")->check(CLI::PositiveNumber);
    g->add_option("--seed", gen.seed, "Random seed")->envname("STABLEGNN_SEED");
    g->add_option("--split", gen.split, "train, val or test")
        ->check(CLI::IsMember({ "train", "val", "test" }));
    g->add_option("--out", gen.out, "Output JSONL path")->required();

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train one or more seeds and write a manifest");
    t->add_option("--config", tr.config, "key = value config file")
        ->check(CLI::ExistingFile)
        ->envname("STABLEGNN_CONFIG");
    t->add_option("--variant", tr.variant, "stable_sage, stable_gcn, baseline_sage or baseline_gcn")
        ->check(CLI::IsMember({ "stable_sage", "stable_gcn", "baseline_sage", "baseline_gcn" }));
    t->add_option("--train", tr.train, "Training set")->required();
    t->add_option("--val", tr.val, "Validation set")->required();
    t->add_option("--test", tr.test, "Test set");
    t->add_option("--out", tr.out, "Output directory")->required();
    t->add_option("--runs", tr.runs, "Number of seeds")->check(CLI::PositiveNumber);
    t->add_option("--jobs", tr.jobs, "Parallel runs")
        ->check(CLI::PositiveNumber)
        ->envname("STABLEGNN_JOBS");
    auto* seed_opt = t->add_option("--seed", tr.seed, "First seed")->envname("STABLEGNN_SEED");
    t->add_option("--set", tr.overrides, "Config override key=value (repeatable)");
    t->add_flag("--trajectory", tr.trajectory, "Dump weight-optimizer trajectories");

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a saved model; prints JSON metrics");
    e->add_option("--model", ev.model, "Model file")->required();
    e->add_option("--data", ev.data, "Dataset")->required();

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Compare baseline and stable manifests");
    r->add_option("manifests", rep.manifests, "manifest.json files")->required();
    r->add_option("--csv", rep.csv_out, "Write the CSV table here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForVersion& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        app.exit(ex);
        return exit_usage;
    }
    tr.seed_given = seed_opt->count() > 0 || std::getenv("STABLEGNN_SEED") != nullptr;

    try {
        if (g->parsed()) {
            return run_gen(gen);
        }
        if (t->parsed()) {
            return run_train(tr);
        }
        if (e->parsed()) {
            return run_eval(ev);
        }
        return run_report(rep);
    } catch (const Failure& f) {
        return f.code;
    }
}
