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

#include "trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace sgnn::train {

Adam::Adam(double beta1, double beta2, double eps)
  : beta1_ { beta1 }, beta2_ { beta2 }, eps_ { eps }
{}

void Adam::step(ParameterStore& store, const std::vector<Matrix>& grads, double lr)
{
    if (grads.size() != store.size()) {
        throw ShapeError { "adam: gradient count does not match parameter count" };
    }
    if (m_.empty()) {
        m_.resize(store.size());
        v_.resize(store.size());
    }
    ++steps_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < store.size(); ++i) {
        Parameter& p = store[i];
        const Matrix& g = grads[i];
        if (!p.trainable || g.size() == 0) {
            continue;
        }
        if (m_[i].size() == 0) {
            m_[i] = Matrix::Zero(g.rows(), g.cols());
            v_[i] = Matrix::Zero(g.rows(), g.cols());
        }
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
        p.value.array() -= lr * (m_[i].array() / c1)
                           / ((v_[i].array() / c2).sqrt() + eps_);
    }
}

PlateauScheduler::PlateauScheduler(double lr, double factor, std::size_t patience,
                                   double threshold)
  : lr_ { lr },
    factor_ { factor },
    patience_ { patience },
    threshold_ { threshold },
    best_ { std::numeric_limits<double>::infinity() }
{}

auto PlateauScheduler::step(double metric) -> bool
{
    if (metric < best_ * (1.0 - threshold_)) {
        best_ = metric;
        bad_epochs_ = 0;
        return false;
    }
    ++bad_epochs_;
    if (bad_epochs_ > patience_) {
        lr_ *= factor_;
        bad_epochs_ = 0;
        return true;
    }
    return false;
}

auto weighted_loss(Var logits, const Matrix& labels, Var weights) -> Var
{
    return ops::sum(ops::scale_rows(ops::bce_with_logits(logits, labels), weights));
}

namespace {

auto batch_of(const graph::Dataset& data, const std::vector<std::size_t>& order,
              std::size_t begin, std::size_t end) -> graph::DenseBatch
{
    std::vector<const graph::Graph*> graphs;
    graphs.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
        graphs.push_back(&data.graphs[order[i]]);
    }
    return graph::make_batch(graphs);
}

auto labels_of(const graph::Dataset& data) -> std::vector<int>
{
    std::vector<int> y;
    y.reserve(data.graphs.size());
    for (const auto& g : data.graphs) {
        y.push_back(g.label);
    }
    return y;
}

auto sigmoid(double x) -> double
{
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

auto bce(double logit, int y) -> double
{
    return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

auto shuffled(std::size_t n, Rng rng) -> std::vector<std::size_t>
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    for (std::size_t i = n; i > 1; --i) {
        std::swap(order[i - 1], order[rng.below(i)]);
    }
    return order;
}

} // namespace

auto predict_logits(Model& model, const graph::Dataset& data, std::size_t batch_size)
    -> std::vector<double>
{
    if (data.graphs.empty()) {
        throw ParameterError { "cannot evaluate an empty dataset" };
    }
    if (batch_size == 0) {
        throw ParameterError { "batch size must be positive" };
    }
    std::vector<std::size_t> order(data.graphs.size());
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::vector<double> out;
    out.reserve(order.size());
    for (std::size_t b = 0; b < order.size(); b += batch_size) {
        const auto batch = batch_of(data, order, b, std::min(order.size(), b + batch_size));
        Tape t;
        Binding binding { t, model.parameters() };
        const auto r = model.forward(binding, batch, false);
        const Matrix& z = r.logits.value();
        for (Index i = 0; i < z.rows(); ++i) {
            out.push_back(z(i, 0));
        }
    }
    return out;
}

auto evaluate(Model& model, const graph::Dataset& data, std::size_t batch_size)
    -> Metrics
{
    const auto logits = predict_logits(model, data, batch_size);
    std::vector<double> p;
    p.reserve(logits.size());
    for (double z : logits) {
        p.push_back(sigmoid(z));
    }
    return compute_metrics(p, labels_of(data));
}

auto train(const TrainConfig& config, const graph::Dataset& train_set,
           const graph::Dataset& val_set, const TrainHooks& hooks) -> TrainResult
{
    config.validate();
    if (train_set.graphs.empty() || val_set.graphs.empty()) {
        throw ParameterError { "train: training and validation sets must be non-empty" };
    }
    const Index d = train_set.graphs.front().features.cols();
    TrainResult result { Model { model_spec(config, d), config.seed }, {}, 0, 0, {} };
    Model& model = result.model;
    ParameterStore best = model.parameters();
    double best_auc = -std::numeric_limits<double>::infinity();

    const bool stable = is_stable(config.variant);
    const Index blocks = config.cluster_count();
    Adam adam;
    PlateauScheduler scheduler { config.lr, config.plateau_factor,
                                 config.plateau_patience };
    Rng dropout_rng { config.seed, 3 };
    const Rng shuffle_root { config.seed, 2 };
    const std::vector<int> val_labels = labels_of(val_set);
    const std::size_t n = train_set.graphs.size();

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto order = shuffled(n, shuffle_root.split(epoch));
        const bool learn = stable && epoch >= config.warmup_epochs;
        double loss_sum = 0.0;
        double hsic_sum = 0.0;
        std::size_t hsic_count = 0;
        const double lr = scheduler.lr();
        std::size_t batch_index = 0;
        for (std::size_t b = 0; b < n; b += config.batch_size, ++batch_index) {
            const auto batch = batch_of(train_set, order, b, std::min(n, b + config.batch_size));
            Tape t;
            Binding binding { t, model.parameters() };
            auto where = [&] {
                return "epoch " + std::to_string(epoch + 1) + ", batch "
                       + std::to_string(batch_index + 1);
            };
            try {
                const auto fwd = model.forward(binding, batch, true, &dropout_rng);
                Matrix w = Matrix::Ones(batch.batch, 1);
                if (learn && batch.batch >= 2) {
                    const auto before = hooks.on_weights
                                            ? model.parameters().fingerprint()
                                            : std::uint64_t { 0 };
                    const auto weights = cvd::learn_weights(fwd.representation.value(),
                                                            blocks, config.decor);
                    if (hooks.on_weights) {
                        hooks.on_weights({ epoch + 1, batch_index + 1, before,
                                           model.parameters().fingerprint(), &weights });
                    }
                    w = weights.weights;
                    result.decor_steps += weights.steps;
                    hsic_sum += weights.trajectory.back();
                    ++hsic_count;
                    if (config.record_trajectories) {
                        result.trajectories.push_back(weights.trajectory);
                    }
                }
                Var loss = weighted_loss(fwd.logits, batch.labels, t.constant(w));
                loss_sum += loss.value()(0, 0);
                t.backward(loss);
                adam.step(model.parameters(), binding.gradients(), lr);
            } catch (const NumericError& e) {
                throw NumericError { where() + ": " + e.what() };
            }
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.lr = lr;
        rec.train_loss = loss_sum / static_cast<double>(n);
        rec.mean_hsic = hsic_count > 0 ? hsic_sum / static_cast<double>(hsic_count)
                                       : std::numeric_limits<double>::quiet_NaN();
        const auto logits = predict_logits(model, val_set, config.batch_size);
        std::vector<double> p;
        p.reserve(logits.size());
        double val_loss = 0.0;
        for (std::size_t i = 0; i < logits.size(); ++i) {
            p.push_back(sigmoid(logits[i]));
            val_loss += bce(logits[i], val_labels[i]);
        }
        rec.val_loss = val_loss / static_cast<double>(logits.size());
        if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.train_loss)) {
            throw NumericError { "epoch " + std::to_string(epoch + 1)
                                 + ": loss is not finite" };
        }
        rec.val = compute_metrics(p, val_labels);
        scheduler.step(rec.val_loss);
        const double auc = rec.val.auc.value_or(-1.0);
        if (auc > best_auc) {
            best_auc = auc;
            best = model.parameters();
            result.best_epoch = epoch + 1;
        }
        result.history.push_back(rec);
    }
    model.parameters() = best;
    return result;
}

namespace {

auto fmt(double v) -> std::string
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

} // namespace

auto history_csv(const std::vector<EpochRecord>& history) -> std::string
{
    std::string out = "epoch,train_loss,val_acc,val_f1,val_auc,mean_hsic,lr\n";
    for (const auto& r : history) {
        char lr[64];
        std::snprintf(lr, sizeof lr, "%.6g", r.lr);
        out += std::to_string(r.epoch) + "," + fmt(r.train_loss) + ","
               + fmt(r.val.accuracy) + "," + fmt(r.val.f1) + ","
               + (r.val.auc ? fmt(*r.val.auc) : std::string { "nan" }) + ","
               + fmt(r.mean_hsic) + "," + lr + "\n";
    }
    return out;
}

auto trajectory_csv(const std::vector<std::vector<double>>& trajectories) -> std::string
{
    std::string out = "batch,step,objective\n";
    char buf[128];
    for (std::size_t b = 0; b < trajectories.size(); ++b) {
        for (std::size_t s = 0; s < trajectories[b].size(); ++s) {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.10g\n", b + 1, s, trajectories[b][s]);
            out += buf;
        }
    }
    return out;
}

} // namespace sgnn::train
