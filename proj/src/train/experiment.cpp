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

#include "experiment.hpp"

#include "train/snapshot.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

namespace sgnn::train {

namespace {

using nlohmann::ordered_json;

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out { path, std::ios::binary };
    if (!out) {
        throw IoError { "cannot write '" + path.string() + "'" };
    }
    out << text;
    if (!out) {
        throw IoError { "failed writing '" + path.string() + "'" };
    }
}

auto metrics_json(const Metrics& m) -> ordered_json
{
    ordered_json j;
    j["accuracy"] = m.accuracy;
    j["f1"] = m.f1;
    j["auc"] = m.auc ? ordered_json(*m.auc) : ordered_json(nullptr);
    return j;
}

auto summary_json(const Summary& s) -> ordered_json
{
    ordered_json j;
    j["mean"] = s.mean;
    j["stderr"] = s.stderr_ ? ordered_json(*s.stderr_) : ordered_json(nullptr);
    j["n"] = s.n;
    return j;
}

auto dataset_json(const std::filesystem::path& path, const graph::Dataset& d)
    -> ordered_json
{
    ordered_json j;
    j["path"] = path.string();
    j["fnv1a64"] = file_digest(path);
    j["split"] = std::string { graph::to_string(d.split) };
    j["mu"] = d.mu;
    j["seed"] = d.seed;
    j["count"] = d.graphs.size();
    return j;
}

} // namespace

auto summarize(const std::vector<double>& values) -> Summary
{
    Summary s;
    s.n = values.size();
    if (values.empty()) {
        return s;
    }
    double total = 0.0;
    for (double v : values) {
        total += v;
    }
    s.mean = total / static_cast<double>(s.n);
    if (s.n >= 2) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.stderr_ = std::sqrt(ss / static_cast<double>(s.n - 1))
                    / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

auto file_digest(const std::filesystem::path& path) -> std::string
{
    std::ifstream in { path, std::ios::binary };
    if (!in) {
        throw IoError { "cannot open '" + path.string() + "'" };
    }
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

auto run_experiment(const ExperimentOptions& options) -> ExperimentResult
{
    options.config.validate();
    if (options.runs < 1) {
        throw ParameterError { "runs must be at least 1" };
    }
    const auto train_set = graph::load_dataset(options.train_path);
    const auto val_set = graph::load_dataset(options.val_path);
    std::optional<graph::Dataset> test_set;
    if (!options.test_path.empty()) {
        test_set = graph::load_dataset(options.test_path);
    }
    std::filesystem::create_directories(options.out_dir);

    std::vector<RunRecord> runs(options.runs);
    std::atomic<std::size_t> next { 0 };
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t k = next++; k < options.runs; k = next++) {
            try {
                TrainConfig cfg = options.config;
                cfg.seed = options.config.seed + k;
                auto result = train(cfg, train_set, val_set);
                const auto dir = options.out_dir / ("seed-" + std::to_string(cfg.seed));
                std::filesystem::create_directories(dir);
                save_model(result.model, dir / "model.txt");
                write_text(dir / "history.csv", history_csv(result.history));
                if (cfg.record_trajectories) {
                    write_text(dir / "trajectory.csv", trajectory_csv(result.trajectories));
                }
                RunRecord& rec = runs[k];
                rec.seed = cfg.seed;
                rec.best_epoch = result.best_epoch;
                rec.decor_steps = result.decor_steps;
                rec.val = result.history[result.best_epoch - 1].val;
                if (test_set) {
                    rec.test = evaluate(result.model, *test_set, cfg.batch_size);
                }
            } catch (...) {
                const std::lock_guard lock { failure_mutex };
                if (!failure) {
                    failure = std::current_exception();
                }
                next = options.runs;
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, options.runs));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t j = 0; j < jobs; ++j) {
            threads.emplace_back(worker);
        }
        for (auto& t : threads) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    ordered_json m;
    m["schema"] = "stablegnn-run";
    m["version"] = 1;
    m["variant"] = to_string(options.config.variant);
    ordered_json cfg;
    for (const auto& [k, v] : options.config.keys()) {
        cfg[k] = v;
    }
    m["config"] = cfg;
    m["datasets"]["train"] = dataset_json(options.train_path, train_set);
    m["datasets"]["val"] = dataset_json(options.val_path, val_set);
    if (test_set) {
        m["datasets"]["test"] = dataset_json(options.test_path, *test_set);
    }
    ordered_json seeds = ordered_json::array();
    ordered_json per_run = ordered_json::array();
    std::size_t decor_steps = 0;
    std::vector<double> acc;
    std::vector<double> f1;
    std::vector<double> auc;
    for (const auto& r : runs) {
        seeds.push_back(r.seed);
        ordered_json j;
        j["seed"] = r.seed;
        j["dir"] = "seed-" + std::to_string(r.seed);
        j["best_epoch"] = r.best_epoch;
        j["decor_steps"] = r.decor_steps;
        j["val"] = metrics_json(r.val);
        if (r.test) {
            j["test"] = metrics_json(*r.test);
            acc.push_back(r.test->accuracy);
            f1.push_back(r.test->f1);
            if (r.test->auc) {
                auc.push_back(*r.test->auc);
            }
        }
        decor_steps += r.decor_steps;
        per_run.push_back(j);
    }
    m["seeds"] = seeds;
    m["decor_steps"] = decor_steps;
    m["runs"] = per_run;
    if (test_set) {
        m["aggregate"]["accuracy"] = summary_json(summarize(acc));
        m["aggregate"]["f1"] = summary_json(summarize(f1));
        m["aggregate"]["auc"] = auc.empty() ? ordered_json(nullptr)
                                            : summary_json(summarize(auc));
    }
    ExperimentResult out { std::move(runs), m.dump(2) + "\n" };
    write_text(options.out_dir / "manifest.json", out.manifest);
    return out;
}

} // namespace sgnn::train
