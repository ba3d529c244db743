#include "train/pipeline.hpp"

#include "app/config.hpp"
#include "data/csv.hpp"
#include "mechanistic/baselines.hpp"
#include "model/checkpoint.hpp"
#include "util/errors.hpp"
#include "util/format.hpp"

#include <algorithm>
#include <cmath>

namespace mepo::train {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(AdaptiveInit i) { return i == AdaptiveInit::StaticFlow ? "static_flow" : "gravity"; }

AdaptiveInit parse_adaptive_init(const std::string& s)
{
    if (s == "static_flow" || s == "static") {
        return AdaptiveInit::StaticFlow;
    }
    if (s == "gravity") {
        return AdaptiveInit::Gravity;
    }
    fail(ErrorKind::Config, "unknown adaptive initialisation '" + s + "' (expected static_flow or gravity)");
}

namespace {

void check_inputs(const data::Dataset& ds, const ModelSpec& spec)
{
    if (spec.mode == model::GraphMode::Dynamic) {
        if (!ds.flows_dynamic) {
            fail(ErrorKind::Config, "dynamic graph mode needs dynamic OD flows (flows_dynamic.csv)");
        }
    } else if (spec.init == AdaptiveInit::Gravity) {
        if (!ds.distances) {
            fail(ErrorKind::Config, "gravity initialisation needs a distance matrix (distances.csv)");
        }
    } else if (!ds.flows_static) {
        fail(ErrorKind::Config, "static-flow initialisation needs a static flow matrix (flows_static.csv)");
    }
}

std::optional<nc::Array> window_flows(const data::Dataset& ds, const ModelSpec& spec)
{
    if (spec.mode == model::GraphMode::Dynamic) {
        return ds.flows_dynamic;
    }
    return std::nullopt;
}

Prepared prepare_impl(data::Dataset ds, const ModelSpec& spec, const data::FeatureStats* stats, bool graph_inputs)
{
    data::validate_regions(ds.regions);
    if (graph_inputs) {
        check_inputs(ds, spec);
    }
    net::validate(spec.network);
    Prepared p;
    p.states = data::derive_states(ds.cases, ds.regions, ds.start);
    const auto plan = data::plan_splits(ds.days(), spec.network.t_in, spec.network.t_out);
    if (stats) {
        p.stats = *stats;
        p.features = data::build_features(ds, p.states, spec.features, p.stats);
    } else {
        p.features = data::build_features(ds, p.states, plan.train.end, spec.features, p.stats);
    }
    p.windows = data::build_windows(p.features, graph_inputs ? window_flows(ds, spec) : std::nullopt, p.states, ds.cases.daily_confirmed,
                                    spec.network.t_in, spec.network.t_out);
    p.ds = std::move(ds);
    return p;
}

nc::Array mean_flows(const nc::Array& flows, std::size_t begin, std::size_t end)
{
    const auto n = flows.dim(1);
    nc::Array out(nc::Shape{n, n});
    for (std::size_t t = begin; t < end; ++t) {
        for (std::size_t k = 0; k < n * n; ++k) {
            out[k] += flows[t * n * n + k];
        }
    }
    for (auto& v : out.data()) {
        v /= double(end - begin);
    }
    return out;
}

} // namespace

Prepared prepare(data::Dataset ds, const ModelSpec& spec)
{
    return prepare_impl(std::move(ds), spec, nullptr, true);
}

Prepared prepare(data::Dataset ds, const ModelSpec& spec, const data::FeatureStats& stats)
{
    return prepare_impl(std::move(ds), spec, &stats, true);
}

Prepared prepare_for_baselines(data::Dataset ds, const ModelSpec& spec)
{
    return prepare_impl(std::move(ds), spec, nullptr, false);
}

nc::Array initial_graph(const data::Dataset& ds, const ModelSpec& spec)
{
    if (spec.init == AdaptiveInit::Gravity) {
        if (!ds.distances) {
            fail(ErrorKind::Config, "gravity initialisation needs a distance matrix (distances.csv)");
        }
        return mobility::generate(ds.regions, *ds.distances, spec.gravity);
    }
    if (!ds.flows_static) {
        fail(ErrorKind::Config, "static-flow initialisation needs a static flow matrix (flows_static.csv)");
    }
    return *ds.flows_static;
}

model::MepoGnn build_model(const Prepared& p, const ModelSpec& spec, std::uint64_t seed)
{
    const auto& train_range = p.windows.plan.train;
    model::MepoGnn m;
    model::RateGuess guess;
    if (spec.mode == model::GraphMode::Adaptive) {
        auto g0 = initial_graph(p.ds, spec);
        m = model::MepoGnn::adaptive(spec.network, g0, seed);
        guess = model::implied_rates(p.states, p.ds.cases.daily_confirmed, train_range.begin, train_range.end,
                                     [&](std::size_t) { return g0; });
    } else {
        m = model::MepoGnn::dynamic(spec.network, seed);
        const auto t_in = spec.network.t_in;
        guess = model::implied_rates(p.states, p.ds.cases.daily_confirmed, train_range.begin, train_range.end,
                                     [&](std::size_t t) {
                                         const auto lo = t + 1 >= t_in ? t + 1 - t_in : 0;
                                         return mean_flows(*p.ds.flows_dynamic, lo, t + 1);
                                     });
    }
    m.network().set_output_bias(guess.beta, guess.gamma);
    return m;
}

json spec_to_json(const ModelSpec& spec)
{
    return {{"mode", model::to_string(spec.mode)},
            {"adaptive_init", to_string(spec.init)},
            {"gravity", app::to_json(spec.gravity)},
            {"network", app::to_json(spec.network)},
            {"features", app::to_json(spec.features)}};
}

ModelSpec spec_from_json(const json& j)
{
    ModelSpec s;
    try {
        s.mode = model::parse_graph_mode(j.at("mode").get<std::string>());
        s.init = parse_adaptive_init(j.at("adaptive_init").get<std::string>());
        s.gravity = app::gravity_from_json(j.at("gravity"));
        s.network = app::network_from_json(j.at("network"));
        s.features = app::features_from_json(j.at("features"));
    } catch (const json::exception& e) {
        fail(ErrorKind::Schema, std::string("checkpoint model spec: ") + e.what());
    }
    return s;
}

void save_model(const fs::path& path, const TrainedModel& tm)
{
    model::Checkpoint ck;
    json regions = json::array();
    for (const auto& r : tm.regions) {
        regions.push_back({{"id", r.id}, {"population", r.population}});
    }
    ck.meta = {{"format", "mepognn"},
               {"spec", spec_to_json(tm.spec)},
               {"stats", app::to_json(tm.stats)},
               {"regions", regions},
               {"info", tm.info}};
    if (tm.spec.mode == model::GraphMode::Adaptive) {
        ck.meta["graph_scale"] = tm.model.adaptive_graph().scale();
    }
    for (const auto* p : tm.model.parameters()) {
        ck.blocks.emplace_back(p->name, p->value);
    }
    model::write_checkpoint(path, ck);
}

TrainedModel load_model(const fs::path& path)
{
    auto ck = model::read_checkpoint(path);
    TrainedModel tm;
    try {
        if (ck.meta.at("format") != "mepognn") {
            fail(ErrorKind::Schema, path.string() + ": unexpected checkpoint format");
        }
        tm.spec = spec_from_json(ck.meta.at("spec"));
        tm.stats = app::stats_from_json(ck.meta.at("stats"));
        for (const auto& r : ck.meta.at("regions")) {
            tm.regions.push_back({r.at("id").get<std::string>(), r.at("population").get<double>()});
        }
        tm.info = ck.meta.value("info", json::object());
    } catch (const json::exception& e) {
        fail(ErrorKind::Schema, path.string() + ": bad checkpoint metadata: " + e.what());
    }
    const auto n = tm.regions.size();
    if (tm.spec.mode == model::GraphMode::Adaptive) {
        tm.model = model::MepoGnn::adaptive(tm.spec.network, nc::Array(nc::Shape{n, n}), 0);
        double scale = 0.0;
        try {
            scale = ck.meta.at("graph_scale").get<double>();
        } catch (const json::exception& e) {
            fail(ErrorKind::Schema, path.string() + ": bad checkpoint metadata: " + e.what());
        }
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            fail(ErrorKind::Schema, path.string() + ": graph_scale must be positive");
        }
        tm.model.adaptive_graph().set_scale(scale);
    } else {
        tm.model = model::MepoGnn::dynamic(tm.spec.network, 0);
    }
    auto params = tm.model.parameters();
    if (params.size() != ck.blocks.size()) {
        fail(ErrorKind::Schema, path.string() + ": checkpoint has " + std::to_string(ck.blocks.size()) +
                                    " blocks, model expects " + std::to_string(params.size()));
    }
    for (auto* p : params) {
        const auto* a = ck.block(p->name);
        if (!a) {
            fail(ErrorKind::Schema, path.string() + ": missing block '" + p->name + "'");
        }
        if (a->shape() != p->value.shape()) {
            fail(ErrorKind::Schema, path.string() + ": block '" + p->name + "' has shape " + nc::shape_str(a->shape()) +
                                        ", expected " + nc::shape_str(p->value.shape()));
        }
        p->value = *a;
    }
    return tm;
}

void check_compatible(const TrainedModel& tm, const data::Dataset& ds)
{
    std::vector<std::string> diffs;
    if (tm.regions.size() != ds.regions.size()) {
        diffs.push_back("region count: checkpoint " + std::to_string(tm.regions.size()) + ", data " +
                        std::to_string(ds.regions.size()));
    } else {
        for (std::size_t i = 0; i < tm.regions.size(); ++i) {
            if (tm.regions[i].id != ds.regions[i].id) {
                diffs.push_back("region " + std::to_string(i) + " id: checkpoint '" + tm.regions[i].id + "', data '" +
                                ds.regions[i].id + "'");
            } else if (tm.regions[i].population != ds.regions[i].population) {
                diffs.push_back("population of '" + tm.regions[i].id + "': checkpoint " +
                                fmt_double(tm.regions[i].population) + ", data " +
                                fmt_double(ds.regions[i].population));
            }
        }
    }
    if (tm.spec.mode == model::GraphMode::Dynamic && !ds.flows_dynamic) {
        diffs.push_back("graph mode: checkpoint is dynamic, data has no dynamic flows");
    }
    if (ds.days() < tm.spec.network.t_in) {
        diffs.push_back("days: data has " + std::to_string(ds.days()) + ", T_in is " +
                        std::to_string(tm.spec.network.t_in));
    }
    if (!diffs.empty()) {
        std::string msg = "checkpoint does not match the input data:";
        for (const auto& d : diffs) {
            msg += "\n  " + d;
        }
        fail(ErrorKind::Config, msg);
    }
}

TrainOutcome fit(const data::Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg, const EpochHook& hook)
{
    auto p = prepare(ds, spec);
    TrainOutcome out;
    out.trained.model = build_model(p, spec, cfg.seed);
    out.result = train(out.trained.model, p.windows.train, p.windows.val, cfg, hook);
    out.trained.spec = spec;
    out.trained.stats = p.stats;
    out.trained.regions = p.ds.regions;
    json info = {{"seed", cfg.seed},
                 {"train", app::to_json(cfg)},
                 {"epochs_run", out.result.log.size()},
                 {"best_epoch", out.result.best_epoch},
                 {"early_stopped", out.result.early_stopped},
                 {"clamped_steps", out.result.clamped},
                 {"train_windows", p.windows.train.size()},
                 {"val_windows", p.windows.val.size()},
                 {"test_windows", p.windows.test.size()}};
    info["best_val_mae"] = out.result.best_val ? json(*out.result.best_val) : json(nullptr);
    out.trained.info = info;
    return out;
}

Forecast forecast(TrainedModel& tm, const data::Dataset& ds, std::size_t origin)
{
    check_compatible(tm, ds);
    const auto& cfg = tm.spec.network;
    if (origin + 1 < cfg.t_in || origin >= ds.days()) {
        fail(ErrorKind::Config, "forecast origin " + ds.date(origin).iso() + " needs " + std::to_string(cfg.t_in) +
                                    " days of history inside the data");
    }
    const auto states = data::derive_states(ds.cases, ds.regions, ds.start);
    const auto features = data::build_features(ds, states, tm.spec.features, tm.stats);
    std::vector<data::Window> w{data::make_window(features, window_flows(ds, tm.spec), states,
                                                  ds.cases.daily_confirmed, origin, cfg.t_in, cfg.t_out)};
    const auto batch = model::make_batch(w, {0});
    nc::Tape tape(false);
    auto out = tm.model.forward(tape, batch, cfg.t_out);
    const auto n = ds.regions.size();
    Forecast f;
    f.origin = origin;
    f.cases = out.cases.value().reshaped({n, cfg.t_out});
    f.beta = out.params.beta.value().reshaped({n, cfg.t_out});
    f.gamma = out.params.gamma.value().reshaped({n, cfg.t_out});
    f.r_hat = nc::Array(f.beta.shape());
    for (std::size_t k = 0; k < f.r_hat.size(); ++k) {
        f.r_hat[k] = f.beta[k] / f.gamma[k];
    }
    f.A = out.A.value().reshaped({n, n});
    f.H = out.H.rank() == 4 ? out.H.value().reshaped({cfg.t_out, n, n}) : out.H.value().reshaped({n, n});
    if (w[0].has_target) {
        f.actual = w[0].target;
    }
    f.clamped = out.clamped;
    return f;
}

void write_forecast(const fs::path& dir, const Forecast& f, const data::Dataset& ds)
{
    data::CsvWriter w(dir / "forecast.csv", {"origin", "date", "region_id", "horizon", "predicted_cases",
                                             "actual_cases", "beta", "gamma", "r_hat"});
    const auto t_out = f.cases.dim(1);
    for (std::size_t n = 0; n < ds.regions.size(); ++n) {
        for (std::size_t j = 0; j < t_out; ++j) {
            w << ds.date(f.origin).iso() << ds.date(f.origin + 1 + j).iso() << ds.regions[n].id << (j + 1)
              << f.cases.at(n, j);
            if (f.actual) {
                w << f.actual->at(n, j);
            } else {
                w << std::string();
            }
            w << f.beta.at(n, j) << f.gamma.at(n, j) << f.r_hat.at(n, j);
            w.end_row();
        }
    }
    w.close();
}

void write_graph(const fs::path& dir, const Forecast& f, const data::Dataset& ds)
{
    const auto n = ds.regions.size();
    data::CsvWriter plain(dir / "graph.csv", {"origin", "destination", "flow"});
    data::CsvWriter logged(dir / "graph_log.csv", {"origin", "destination", "log_flow"});
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            plain << ds.regions[a].id << ds.regions[b].id << f.A.at(a, b);
            plain.end_row();
            logged << ds.regions[a].id << ds.regions[b].id << std::log1p(f.A.at(a, b));
            logged.end_row();
        }
    }
    plain.close();
    logged.close();
    if (f.H.rank() == 3) {
        data::CsvWriter dyn(dir / "graph_dynamic.csv", {"date", "origin", "destination", "flow"});
        for (std::size_t t = 0; t < f.H.dim(0); ++t) {
            for (std::size_t a = 0; a < n; ++a) {
                for (std::size_t b = 0; b < n; ++b) {
                    dyn << ds.date(f.origin + 1 + t).iso() << ds.regions[a].id << ds.regions[b].id
                        << f.H.at(t, a, b);
                    dyn.end_row();
                }
            }
        }
        dyn.close();
    }
}

nc::Array baseline_graph(const data::Dataset& ds, const mobility::GravityConfig& gravity)
{
    nc::Array h;
    if (ds.flows_static) {
        h = *ds.flows_static;
    } else if (ds.flows_dynamic) {
        h = mean_flows(*ds.flows_dynamic, 0, ds.flows_dynamic->dim(0));
    } else if (ds.distances) {
        h = mobility::generate(ds.regions, *ds.distances, gravity);
    } else {
        fail(ErrorKind::Config, "metapopulation baselines need static flows, dynamic flows or distances");
    }
    const auto pop = data::populations(ds.regions);
    double mean_p = 0.0;
    for (double p : pop) {
        mean_p += p / double(pop.size());
    }
    for (auto& v : h.data()) {
        v /= mean_p;
    }
    return h;
}

nc::Array baseline_predict(const Prepared& p, Baseline b, const std::vector<data::Window>& windows)
{
    require(!windows.empty(), "baseline_predict: no windows");
    const auto n = p.ds.regions.size();
    const auto t_in = windows[0].features.dim(1);
    const auto t_out = windows[0].target.dim(1);
    const bool meta = b == Baseline::MetaSir || b == Baseline::MetaSirCopy;
    const bool copy = b == Baseline::SirCopy || b == Baseline::MetaSirCopy;
    const auto model = meta ? mech::BaselineModel::MetaSir : mech::BaselineModel::Sir;
    const nc::Array h = meta ? baseline_graph(p.ds, {}) : nc::Array(nc::Shape{n, n});
    const auto& daily = p.ds.cases.daily_confirmed;

    nc::Array out(nc::Shape{windows.size(), n, t_out});
    for (std::size_t w = 0; w < windows.size(); ++w) {
        const auto t = windows[w].origin;
        const auto first = t + 1 - t_in;
        std::vector<mech::SirParams> params;
        if (copy) {
            std::vector<mech::SirParams> history;
            for (std::size_t k = first; k < t; ++k) {
                std::vector<double> y(n);
                for (std::size_t i = 0; i < n; ++i) {
                    y[i] = daily.at(i, k + 1);
                }
                history.push_back(mech::fit_daily(p.states[k], p.states[k + 1], y, model, h));
            }
            params = mech::copy_baseline(history, t_out);
        } else {
            std::vector<data::EpidemicState> hist(p.states.begin() + long(first), p.states.begin() + long(t) + 1);
            nc::Array y(nc::Shape{n, t_in - 1});
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t k = 0; k + 1 < t_in; ++k) {
                    y.at(i, k) = daily.at(i, first + k + 1);
                }
            }
            const auto fitted = mech::fit_baseline(hist, y, model, h);
            params.assign(t_out, fitted.params);
        }
        const auto pred = mech::baseline_rollout(p.states[t], params, model, h);
        std::copy(pred.data().begin(), pred.data().end(), out.data().begin() + w * n * t_out);
    }
    return out;
}

Evaluation evaluate(TrainedModel& tm, const data::Dataset& ds)
{
    check_compatible(tm, ds);
    auto p = prepare(ds, tm.spec, tm.stats);
    if (p.windows.test.empty()) {
        fail(ErrorKind::DataIntegrity, "the test split has no complete windows (" + std::to_string(ds.days()) +
                                           " days are too few for a 6:1:1 split)");
    }
    Evaluation e;
    e.prediction = predict(tm.model, p.windows.test);
    e.target = stack_targets(p.windows.test);
    e.report = report(e.prediction.cases, e.target);
    return e;
}

namespace {

std::optional<Baseline> baseline_for(const std::string& name)
{
    if (name == "SIR") {
        return Baseline::Sir;
    }
    if (name == "SIR(Copy)") {
        return Baseline::SirCopy;
    }
    if (name == "MetaSIR") {
        return Baseline::MetaSir;
    }
    if (name == "MetaSIR(Copy)") {
        return Baseline::MetaSirCopy;
    }
    return std::nullopt;
}

std::optional<ModelSpec> neural_spec(const std::string& name, const ModelSpec& base)
{
    ModelSpec s = base;
    if (name == "MepoGNN(Adp)") {
        s.mode = model::GraphMode::Adaptive;
    } else if (name == "MepoGNN(Adp,static)") {
        s.mode = model::GraphMode::Adaptive;
        s.init = AdaptiveInit::StaticFlow;
    } else if (name == "MepoGNN(Adp,gravity)") {
        s.mode = model::GraphMode::Adaptive;
        s.init = AdaptiveInit::Gravity;
    } else if (name == "MepoGNN(Dyn)") {
        s.mode = model::GraphMode::Dynamic;
    } else {
        return std::nullopt;
    }
    return s;
}

} // namespace

std::vector<BenchmarkRow> benchmark(const data::Dataset& ds, const BenchmarkConfig& cfg, const Progress& progress)
{
    require(!cfg.seeds.empty(), "benchmark: at least one seed is required");
    std::vector<BenchmarkRow> rows;
    std::optional<Prepared> base_prep;
    for (const auto& name : cfg.models) {
        BenchmarkRow row;
        row.model = name;
        try {
            if (auto b = baseline_for(name)) {
                if (progress) {
                    progress(name, 0);
                }
                if (!base_prep) {
                    base_prep = prepare_for_baselines(ds, cfg.spec);
                }
                if (base_prep->windows.test.empty()) {
                    fail(ErrorKind::DataIntegrity, "the test split has no complete windows");
                }
                const auto pred = baseline_predict(*base_prep, *b, base_prep->windows.test);
                row.runs.push_back(report(pred, stack_targets(base_prep->windows.test)));
            } else if (auto spec = neural_spec(name, cfg.spec)) {
                for (auto seed : cfg.seeds) {
                    if (progress) {
                        progress(name, seed);
                    }
                    TrainConfig tc = cfg.train;
                    tc.seed = seed;
                    auto outcome = fit(ds, *spec, tc);
                    row.runs.push_back(evaluate(outcome.trained, ds).report);
                }
            } else {
                fail(ErrorKind::Config, "unknown benchmark model '" + name + "'");
            }
        } catch (const Error& e) {
            row.error = e.what();
            row.runs.clear();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

struct Cell
{
    std::optional<Summary> s;
};

Cell summarize_metric(const std::vector<MetricReport>& runs, std::optional<std::size_t> horizon,
                      const std::string& metric)
{
    std::vector<double> vals;
    for (const auto& r : runs) {
        const Metrics* m = &r.overall;
        if (horizon) {
            m = nullptr;
            for (const auto& h : r.horizons) {
                if (h.horizon == *horizon) {
                    m = &h.m;
                }
            }
            if (!m) {
                return {};
            }
        }
        std::optional<double> v;
        if (metric == "RMSE") {
            v = m->rmse;
        } else if (metric == "MAE") {
            v = m->mae;
        } else if (metric == "MAPE") {
            v = m->mape;
        } else {
            v = m->rae;
        }
        if (!v) {
            return {};
        }
        vals.push_back(*v);
    }
    if (vals.empty()) {
        return {};
    }
    return {summarize(vals)};
}

const std::vector<std::string> kMetrics{"RMSE", "MAE", "MAPE", "RAE"};

} // namespace

void write_benchmark(const fs::path& dir, const std::vector<BenchmarkRow>& rows)
{
    std::vector<std::optional<std::size_t>> groups;
    for (auto h : kReportHorizons) {
        groups.emplace_back(h);
    }
    groups.emplace_back(std::nullopt);
    auto group_name = [](const std::optional<std::size_t>& h) {
        return h ? std::to_string(*h) + "day" : std::string("overall");
    };

    std::vector<std::string> header{"model"};
    for (const auto& g : groups) {
        for (const auto& m : kMetrics) {
            header.push_back(group_name(g) + "_" + m);
        }
    }
    data::CsvWriter table(dir / "benchmark.csv", header);
    data::CsvWriter longform(dir / "benchmark_long.csv",
                             {"model", "horizon", "metric", "mean", "ci95", "runs", "status"});
    for (const auto& row : rows) {
        table << row.model;
        for (const auto& g : groups) {
            for (const auto& m : kMetrics) {
                std::string text = "NA";
                std::string status = "ok";
                Cell c;
                if (row.error) {
                    text = "failed";
                    status = "failed";
                } else {
                    c = summarize_metric(row.runs, g, m);
                    if (c.s) {
                        text = fmt_fixed(c.s->mean, 4);
                        if (c.s->ci) {
                            text += "±" + fmt_fixed(*c.s->ci, 4);
                        }
                    } else {
                        status = "absent";
                    }
                }
                table << text;
                longform << row.model << group_name(g) << m;
                if (c.s) {
                    longform << c.s->mean;
                    if (c.s->ci) {
                        longform << *c.s->ci;
                    } else {
                        longform << std::string();
                    }
                } else {
                    longform << std::string() << std::string();
                }
                longform << row.runs.size() << status;
                longform.end_row();
            }
        }
        table.end_row();
    }
    table.close();
    longform.close();
}

} // namespace mepo::train
