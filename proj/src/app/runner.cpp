#include "app/runner.hpp"

#include "app/digest.hpp"
#include "data/csv.hpp"
#include "data/dataset_io.hpp"
#include "mechanistic/sir.hpp"
#include "train/diagnostics.hpp"
#include "train/pipeline.hpp"
#include "util/errors.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>

namespace fs = std::filesystem;

namespace mepo::app {

namespace {

// Files whose bytes legitimately differ between identical runs (wall-clock
// timings). They are listed in the manifest without a digest.
const std::set<std::string> kVolatile{"train_log.csv"};

struct Artifacts
{
    fs::path dir;
    std::vector<std::string> files;

    fs::path add(const std::string& name)
    {
        files.push_back(name);
        return dir / name;
    }
};

std::vector<std::string> input_files(const std::string& command, const RunConfig& cfg)
{
    std::vector<std::string> out;
    if (command == "synth" || command == "grad-check") {
        return out;
    }
    out = resolve_paths(cfg).present();
    if (command == "normalize-od") {
        out.push_back(raw_flows_path(cfg));
    }
    if (command == "forecast" || command == "evaluate") {
        out.push_back(cfg.checkpoint);
    }
    return out;
}

void write_manifest(const std::string& command, const RunConfig& cfg, const Artifacts& art)
{
    json inputs = json::array();
    for (const auto& path : input_files(command, cfg)) {
        inputs.push_back({{"path", path}, {"sha256", sha256_file(path)}});
    }
    json outputs = json::array();
    for (const auto& name : art.files) {
        json entry = {{"file", name}};
        if (kVolatile.count(name)) {
            entry["sha256"] = nullptr;
            entry["note"] = "contains wall-clock timings";
        } else {
            entry["sha256"] = sha256_file(art.dir / name);
        }
        outputs.push_back(entry);
    }
    std::uint64_t seed = cfg.seed;
    if (command == "train" || command == "grad-check") {
        seed = cfg.train.seed;
    }
    json m = {{"tool", kToolName},
              {"version", kToolVersion},
              {"command", command},
              {"seed", seed},
              {"config", to_json(cfg)},
              {"inputs", inputs},
              {"outputs", outputs}};
    std::ofstream out(art.dir / "manifest.json", std::ios::binary);
    out << m.dump(2) << '\n';
    if (!out) {
        fail(ErrorKind::Io, "cannot write " + (art.dir / "manifest.json").string());
    }
}

std::size_t day_index(const data::Dataset& ds, const std::string& iso, const std::string& what)
{
    if (iso.empty()) {
        return ds.days() - 1;
    }
    auto d = data::Date::parse(iso);
    if (!d) {
        fail(ErrorKind::Config, what + " '" + iso + "' is not an ISO date");
    }
    const long off = d->minus(ds.start);
    if (off < 0 || static_cast<std::size_t>(off) >= ds.days()) {
        fail(ErrorKind::Config, what + " " + iso + " lies outside the data (" + ds.start.iso() + " to " +
                                    ds.date(ds.days() - 1).iso() + ")");
    }
    return static_cast<std::size_t>(off);
}

train::ModelSpec model_spec(const RunConfig& cfg)
{
    train::ModelSpec spec;
    spec.mode = model::parse_graph_mode(cfg.mode);
    spec.init = train::parse_adaptive_init(cfg.adaptive_init);
    spec.gravity = cfg.gravity;
    spec.network = cfg.network;
    spec.features = cfg.features;
    return spec;
}

void write_report(const fs::path& path, const train::MetricReport& rep)
{
    data::CsvWriter w(path, {"scope", "rmse", "mae", "mape", "rae", "count", "mape_skipped"});
    auto row = [&](const std::string& scope, const train::Metrics& m) {
        w << scope << m.rmse << m.mae;
        m.mape ? (w << *m.mape) : (w << std::string());
        m.rae ? (w << *m.rae) : (w << std::string());
        w << m.count << m.mape_skipped;
        w.end_row();
    };
    row("overall", rep.overall);
    for (const auto& h : rep.horizons) {
        row(std::to_string(h.horizon) + "day", h.m);
    }
    w.close();
}

void cmd_generate_mobility(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    const auto p = resolve_paths(cfg);
    const auto regions = data::read_regions(p.regions);
    const auto dist = data::read_static_flows(p.distances, regions, "km");
    const auto m = mobility::generate(regions, dist, cfg.gravity);
    data::write_matrix(m, regions, art.add("gravity.csv"), "flow");
    log << "gravity mobility for " << regions.size() << " regions\n";
}

void cmd_normalize_od(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    auto ds = data::load_dataset(resolve_paths(cfg));
    const auto raw = data::read_dynamic_flows(raw_flows_path(cfg), ds.regions, ds.start, ds.days());
    data::Anchor anchor{data::largest_region(ds.regions), 0};
    if (!cfg.anchor_region.empty()) {
        bool found = false;
        for (std::size_t i = 0; i < ds.regions.size(); ++i) {
            if (ds.regions[i].id == cfg.anchor_region) {
                anchor.region = i;
                found = true;
            }
        }
        if (!found) {
            fail(ErrorKind::Config, "anchor region '" + cfg.anchor_region + "' is not in regions.csv");
        }
    }
    if (!cfg.anchor_date.empty()) {
        anchor.day = day_index(ds, cfg.anchor_date, "anchor date");
    }
    const auto rates = data::sample_rates(ds.regions, ds.stay_put, *ds.unique_users);
    const auto flows = data::normalize_od(raw, rates, anchor, ds.start);
    data::write_dynamic_flows(flows, ds.regions, ds.start, art.add("flows_dynamic.csv"));
    log << "normalized " << ds.days() << " days of flows at the sample rate of " << ds.regions[anchor.region].id
        << " on " << ds.date(anchor.day).iso() << "\n";
}

nc::Array simulation_graph(const data::Dataset& ds, const RunConfig& cfg)
{
    if (ds.flows_static) {
        return *ds.flows_static;
    }
    if (ds.flows_dynamic) {
        const auto n = ds.regions.size();
        nc::Array h(nc::Shape{n, n}, 0.0);
        for (std::size_t t = 0; t < ds.days(); ++t) {
            for (std::size_t i = 0; i < n * n; ++i) {
                h[i] += (*ds.flows_dynamic)[t * n * n + i] / double(ds.days());
            }
        }
        return h;
    }
    return mobility::generate(ds.regions, *ds.distances, cfg.gravity);
}

void cmd_simulate(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    const auto ds = data::load_dataset(resolve_paths(cfg));
    const auto states = data::derive_states(ds.cases, ds.regions, ds.start);
    const auto origin = day_index(ds, cfg.origin, "origin");
    const auto& sim = cfg.simulate;
    const auto n = ds.regions.size();
    const nc::Array h = sim.model == "sir" ? nc::Array() : simulation_graph(ds, cfg);
    mech::SirParams params{std::vector<double>(n, sim.beta), std::vector<double>(n, sim.gamma)};

    data::CsvWriter w(art.add("simulation.csv"), {"step", "date", "region_id", "S", "I", "R", "new_cases"});
    auto emit = [&](std::size_t step, const data::EpidemicState& s, const std::vector<double>& cases) {
        for (std::size_t i = 0; i < n; ++i) {
            w << step << ds.date(origin + step).iso() << ds.regions[i].id << s.S[i] << s.I[i] << s.R[i] << cases[i];
            w.end_row();
        }
    };
    std::vector<double> observed(n);
    for (std::size_t i = 0; i < n; ++i) {
        observed[i] = ds.cases.daily_confirmed.at(i, origin);
    }
    mech::ClampCounter clamp;
    data::EpidemicState s = states[origin];
    emit(0, s, observed);
    for (std::size_t step = 1; step <= sim.days; ++step) {
        mech::StepResult r;
        if (sim.model == "sir") {
            r = mech::sir_step(s, params, &clamp);
        } else if (sim.model == "metasir") {
            r = mech::metasir_step_original(s, params, h, &clamp);
        } else {
            r = mech::mepo_step(s, params.beta, params.gamma, h, &clamp);
        }
        s = std::move(r.state);
        emit(step, s, r.new_cases);
    }
    w.close();
    log << "simulated " << sim.days << " days of " << sim.model << " from " << ds.date(origin).iso();
    if (clamp.clamped > 0) {
        log << " (" << clamp.clamped << " steps capped at the susceptible pool)";
    }
    log << "\n";
}

void cmd_synth(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    const auto sc = data::synth_scenario(cfg.scenario, cfg.seed);
    data::save_scenario(sc, art.dir);
    for (const auto& path : data::DataPaths::in_directory(art.dir).present()) {
        art.files.push_back(fs::path(path).filename().string());
    }
    art.files.push_back("flows_raw.csv");
    log << "synthetic scenario: " << sc.dataset.regions.size() << " regions, " << sc.dataset.days() << " days from "
        << sc.dataset.start.iso() << "\n";
}

void cmd_train(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    const auto ds = data::load_dataset(resolve_paths(cfg));
    const auto spec = model_spec(cfg);
    auto hook = [&](const train::EpochLog& e, model::MepoGnn&) {
        if (e.epoch == 1 || e.epoch % 10 == 0) {
            log << "epoch " << e.epoch << " horizon " << e.horizon << " train_mae " << e.train_mae;
            if (e.val_mae) {
                log << " val_mae " << *e.val_mae;
            }
            log << "\n";
        }
        return true;
    };
    auto out = train::fit(ds, spec, cfg.train, hook);
    train::save_model(art.add("model.ckpt"), out.trained);
    train::write_log(art.add("train_log.csv"), out.result.log);
    std::ofstream summary(art.add("training.json"), std::ios::binary);
    summary << out.trained.info.dump(2) << '\n';
    log << "best epoch " << out.result.best_epoch << " of " << out.result.log.size() << "\n";
}

void cmd_forecast(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    auto tm = train::load_model(cfg.checkpoint);
    const auto ds = data::load_dataset(resolve_paths(cfg));
    train::check_compatible(tm, ds);
    const auto origin = day_index(ds, cfg.origin, "origin");
    const auto f = train::forecast(tm, ds, origin);
    train::write_forecast(art.dir, f, ds);
    art.files.push_back("forecast.csv");
    train::write_graph(art.dir, f, ds);
    art.files.push_back("graph.csv");
    art.files.push_back("graph_log.csv");
    if (tm.spec.mode == model::GraphMode::Dynamic) {
        art.files.push_back("graph_dynamic.csv");
    }
    log << "forecast from " << ds.date(origin).iso() << " for " << f.cases.dim(1) << " days";
    if (f.clamped > 0) {
        log << " (" << f.clamped << " steps capped at the susceptible pool)";
    }
    log << "\n";
}

void cmd_evaluate(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    auto tm = train::load_model(cfg.checkpoint);
    const auto ds = data::load_dataset(resolve_paths(cfg));
    train::check_compatible(tm, ds);
    const auto ev = train::evaluate(tm, ds);
    write_report(art.add("metrics.csv"), ev.report);

    const auto p = train::prepare(ds, tm.spec, tm.stats);
    const auto& test = p.windows.test;
    data::CsvWriter w(art.add("test_predictions.csv"),
                      {"origin", "date", "region_id", "horizon", "predicted_cases", "actual_cases"});
    for (std::size_t k = 0; k < test.size(); ++k) {
        for (std::size_t n = 0; n < ds.regions.size(); ++n) {
            for (std::size_t j = 0; j < ev.target.dim(2); ++j) {
                w << ds.date(test[k].origin).iso() << ds.date(test[k].origin + 1 + j).iso() << ds.regions[n].id
                  << (j + 1) << ev.prediction.cases.at(k, n, j) << ev.target.at(k, n, j);
                w.end_row();
            }
        }
    }
    w.close();
    log << "test windows " << test.size() << ", overall MAE " << ev.report.overall.mae << "\n";
}

void cmd_benchmark(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    const auto ds = data::load_dataset(resolve_paths(cfg));
    train::BenchmarkConfig bc;
    if (!cfg.models.empty()) {
        bc.models = cfg.models;
    }
    bc.seeds = cfg.seeds;
    bc.train = cfg.train;
    bc.spec = model_spec(cfg);
    auto rows = train::benchmark(ds, bc, [&](const std::string& m, std::uint64_t seed) {
        log << "running " << m << " seed " << seed << "\n";
    });
    train::write_benchmark(art.dir, rows);
    art.files.push_back("benchmark.csv");
    art.files.push_back("benchmark_long.csv");
    for (const auto& r : rows) {
        if (r.error) {
            log << r.model << " failed: " << *r.error << "\n";
        }
    }
}

void cmd_grad_check(const RunConfig& cfg, Artifacts& art, std::ostream& log)
{
    train::ModelGradCheck chk;
    chk.regions = cfg.grad_check.regions;
    chk.batch = cfg.grad_check.batch;
    chk.mode = model::parse_graph_mode(cfg.mode);
    chk.seed = cfg.train.seed;
    chk.options.max_entries_per_block = cfg.grad_check.max_entries;
    chk.options.seed = cfg.train.seed;
    const auto rep = train::model_grad_check(cfg.network, chk);
    data::CsvWriter w(art.add("gradcheck.csv"),
                      {"block", "entries", "rel_error", "worst_index", "analytic", "numeric", "status"});
    std::vector<std::string> failed;
    for (const auto& b : rep.blocks) {
        w << b.name << b.checked << b.rel_error << b.worst_index << b.analytic << b.numeric
          << std::string(b.failed ? "fail" : "ok");
        w.end_row();
        if (b.failed) {
            failed.push_back(b.name);
        }
    }
    w.close();
    log << rep.blocks.size() << " parameter blocks, max relative error " << rep.max_rel_error << "\n";
    if (!failed.empty()) {
        std::string names;
        for (const auto& f : failed) {
            names += (names.empty() ? "" : ", ") + f;
        }
        write_manifest("grad-check", cfg, art);
        fail(ErrorKind::NumericDomain, "gradient check failed for " + names);
    }
}

} // namespace

void run(const std::string& command, const RunConfig& cfg, std::ostream& log)
{
    if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end()) {
        fail(ErrorKind::Config, "unknown command '" + command + "'");
    }
    validate(cfg, command);
    Artifacts art{fs::path(cfg.output_dir), {}};
    std::error_code ec;
    fs::create_directories(art.dir, ec);
    if (ec) {
        fail(ErrorKind::Io, "cannot create output directory " + cfg.output_dir + ": " + ec.message());
    }
    if (command == "generate-mobility") {
        cmd_generate_mobility(cfg, art, log);
    } else if (command == "normalize-od") {
        cmd_normalize_od(cfg, art, log);
    } else if (command == "simulate") {
        cmd_simulate(cfg, art, log);
    } else if (command == "synth") {
        cmd_synth(cfg, art, log);
    } else if (command == "train") {
        cmd_train(cfg, art, log);
    } else if (command == "forecast") {
        cmd_forecast(cfg, art, log);
    } else if (command == "evaluate") {
        cmd_evaluate(cfg, art, log);
    } else if (command == "benchmark") {
        cmd_benchmark(cfg, art, log);
    } else {
        cmd_grad_check(cfg, art, log);
    }
    write_manifest(command, cfg, art);
}

} // namespace mepo::app
