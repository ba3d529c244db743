#include "train/trainer.hpp"

#include "data/csv.hpp"
#include "numeric/ops.hpp"
#include "train/optimizer.hpp"
#include "util/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

namespace mepo::train {

void validate(const TrainConfig& cfg)
{
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, "train config: " + msg); };
    if (cfg.batch < 1 || cfg.max_epochs < 1 || cfg.curriculum_step < 1) {
        bad("batch, max_epochs and curriculum_step must be positive");
    }
    if (!(cfg.lr > 0.0) || !(cfg.weight_decay >= 0.0)) {
        bad("learning rate must be positive and weight decay nonnegative");
    }
    if (cfg.patience < 1) {
        bad("patience must be at least 1");
    }
}

std::size_t curriculum_horizon(std::size_t epoch, std::size_t t_out, std::size_t step)
{
    require(epoch >= 1 && step >= 1, "curriculum_horizon: epoch and step start at 1");
    return std::min((epoch + step - 1) / step, t_out);
}

namespace {

std::vector<std::vector<std::size_t>> batches(std::vector<std::size_t> order, std::size_t size)
{
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < order.size(); i += size) {
        out.emplace_back(order.begin() + i, order.begin() + std::min(order.size(), i + size));
    }
    return out;
}

nc::Var head_targets(nc::Tape& tape, const nc::Array& target, std::size_t steps)
{
    auto y = tape.constant(target);
    return steps == target.dim(2) ? y : nc::slice(y, 2, 0, steps);
}

std::vector<nc::Array> snapshot(model::MepoGnn& m)
{
    std::vector<nc::Array> out;
    for (auto* p : m.parameters()) {
        out.push_back(p->value);
    }
    return out;
}

void restore(model::MepoGnn& m, const std::vector<nc::Array>& values)
{
    auto ps = m.parameters();
    for (std::size_t k = 0; k < ps.size(); ++k) {
        ps[k]->value = values[k];
    }
}

} // namespace

TrainResult train(model::MepoGnn& m, const std::vector<data::Window>& train_set,
                  const std::vector<data::Window>& val_set, const TrainConfig& cfg, const EpochHook& hook)
{
    validate(cfg);
    if (train_set.empty()) {
        fail(ErrorKind::DataIntegrity, "training split has no complete windows");
    }
    const auto t_out = m.config().t_out;
    auto params = m.parameters();
    AdamW opt(params, {cfg.lr, cfg.weight_decay});
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult res;
    std::vector<nc::Array> best = snapshot(m);
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto h = curriculum_horizon(epoch, t_out, cfg.curriculum_step);
        std::shuffle(order.begin(), order.end(), rng);
        double abs_sum = 0.0;
        std::size_t count = 0;
        std::size_t bi = 0;
        for (const auto& idx : batches(order, cfg.batch)) {
            ++bi;
            const auto batch = model::make_batch(train_set, idx);
            nc::Tape tape;
            nc::Var loss;
            try {
                auto out = m.forward(tape, batch, h);
                res.clamped += out.clamped;
                loss = nc::mean_all(nc::abs(nc::sub(out.cases, head_targets(tape, batch.target, h))));
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NumericDomain) {
                    throw;
                }
                fail(ErrorKind::NumericDomain, std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                                   ", batch " + std::to_string(bi) + ")");
            }
            const double lv = loss.value().item();
            if (!std::isfinite(lv)) {
                fail(ErrorKind::NumericDomain, "non-finite training loss at epoch " + std::to_string(epoch) +
                                                   ", batch " + std::to_string(bi));
            }
            nc::backward(loss, params);
            opt.step();
            const auto n = batch.size() * batch.target.dim(1) * h;
            abs_sum += lv * double(n);
            count += n;
        }
        EpochLog entry;
        entry.epoch = epoch;
        entry.horizon = h;
        entry.train_mae = abs_sum / double(count);
        if (!val_set.empty()) {
            entry.val_mae = mae(m, val_set, t_out, cfg.batch);
        }
        entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.push_back(entry);

        if (entry.val_mae) {
            if (!res.best_val || *entry.val_mae < *res.best_val) {
                res.best_val = entry.val_mae;
                res.best_epoch = epoch;
                best = snapshot(m);
            }
        } else {
            res.best_epoch = epoch;
            best = snapshot(m);
        }
        if (hook && !hook(entry, m)) {
            break;
        }
        if (entry.val_mae && epoch - res.best_epoch >= cfg.patience) {
            res.early_stopped = true;
            break;
        }
    }
    restore(m, best);
    return res;
}

Prediction predict(model::MepoGnn& m, const std::vector<data::Window>& windows, std::size_t batch)
{
    require(!windows.empty(), "predict: no windows");
    const auto t_out = m.config().t_out;
    const auto n = windows[0].features.dim(0);
    Prediction p;
    p.cases = nc::Array(nc::Shape{windows.size(), n, t_out});
    p.beta = p.cases;
    p.gamma = p.cases;
    const auto per = n * t_out;
    for (std::size_t start = 0; start < windows.size(); start += batch) {
        std::vector<std::size_t> idx;
        for (std::size_t k = start; k < std::min(windows.size(), start + batch); ++k) {
            idx.push_back(k);
        }
        const auto b = model::make_batch(windows, idx);
        nc::Tape tape(false);
        auto out = m.forward(tape, b, t_out);
        p.clamped += out.clamped;
        std::copy(out.cases.value().data().begin(), out.cases.value().data().end(),
                  p.cases.data().begin() + start * per);
        std::copy(out.params.beta.value().data().begin(), out.params.beta.value().data().end(),
                  p.beta.data().begin() + start * per);
        std::copy(out.params.gamma.value().data().begin(), out.params.gamma.value().data().end(),
                  p.gamma.data().begin() + start * per);
    }
    return p;
}

double mae(model::MepoGnn& m, const std::vector<data::Window>& windows, std::size_t steps, std::size_t batch)
{
    const auto p = predict(m, windows, batch);
    const auto t_out = p.cases.dim(2);
    const auto per = p.cases.size() / windows.size();
    double s = 0.0;
    std::size_t c = 0;
    for (std::size_t k = 0; k < p.cases.size(); ++k) {
        if (k % t_out < steps) {
            s += std::abs(p.cases[k] - windows[k / per].target[k % per]);
            ++c;
        }
    }
    return s / double(c);
}

nc::Array stack_targets(const std::vector<data::Window>& windows)
{
    require(!windows.empty(), "stack_targets: no windows");
    const auto& t0 = windows[0].target;
    nc::Array out(nc::Shape{windows.size(), t0.dim(0), t0.dim(1)});
    for (std::size_t k = 0; k < windows.size(); ++k) {
        std::copy(windows[k].target.data().begin(), windows[k].target.data().end(),
                  out.data().begin() + k * t0.size());
    }
    return out;
}

void write_log(const std::filesystem::path& path, const std::vector<EpochLog>& log)
{
    data::CsvWriter w(path, {"epoch", "horizon", "train_mae", "val_mae", "seconds"});
    for (const auto& e : log) {
        w << e.epoch << e.horizon << e.train_mae;
        if (e.val_mae) {
            w << *e.val_mae;
        } else {
            w << std::string();
        }
        w << e.seconds;
        w.end_row();
    }
    w.close();
}

} // namespace mepo::train
