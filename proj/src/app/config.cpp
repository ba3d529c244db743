#include "app/config.hpp"

#include "util/errors.hpp"

#include <filesystem>
#include <fstream>
#include <set>

namespace mepo::app {

namespace {

class FieldReader
{
public:
    FieldReader(const json& j, std::string ctx)
        : j_(j)
        , ctx_(std::move(ctx))
    {
        if (!j_.is_object()) {
            fail(ErrorKind::Config, ctx_ + " must be a JSON object");
        }
    }

    template <typename T>
    FieldReader& operator()(const char* key, T& dst)
    {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) {
            return *this;
        }
        try {
            it->get_to(dst);
        } catch (const json::exception& e) {
            fail(ErrorKind::Config, ctx_ + ": bad value for '" + key + "': " + e.what());
        }
        return *this;
    }

    template <typename T, typename Parse>
    FieldReader& nested(const char* key, T& dst, Parse parse)
    {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) {
            dst = parse(*it);
        }
        return *this;
    }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                fail(ErrorKind::Config, ctx_ + ": unknown key '" + key + "'");
            }
        }
    }

private:
    const json& j_;
    std::string ctx_;
    std::set<std::string> seen_;
};

} // namespace

json to_json(const net::NetworkConfig& c)
{
    return {{"layers", c.layers},
            {"hidden", c.hidden},
            {"kernel", c.kernel},
            {"dilations", c.dilations},
            {"diffusion_steps", c.diffusion_steps},
            {"skip", c.skip},
            {"t_in", c.t_in},
            {"t_out", c.t_out},
            {"in_channels", c.in_channels}};
}

net::NetworkConfig network_from_json(const json& j)
{
    net::NetworkConfig c;
    FieldReader(j, "network")("layers", c.layers)("hidden", c.hidden)("kernel", c.kernel)("dilations", c.dilations)(
        "diffusion_steps", c.diffusion_steps)("skip", c.skip)("t_in", c.t_in)("t_out", c.t_out)("in_channels",
                                                                                                 c.in_channels)
        .finish();
    return c;
}

json to_json(const train::TrainConfig& c)
{
    return {{"batch", c.batch},
            {"lr", c.lr},
            {"weight_decay", c.weight_decay},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"curriculum_step", c.curriculum_step},
            {"seed", c.seed}};
}

train::TrainConfig train_from_json(const json& j)
{
    train::TrainConfig c;
    FieldReader(j, "train")("batch", c.batch)("lr", c.lr)("weight_decay", c.weight_decay)("max_epochs", c.max_epochs)(
        "patience", c.patience)("curriculum_step", c.curriculum_step)("seed", c.seed)
        .finish();
    return c;
}

json to_json(const mobility::GravityConfig& c)
{
    return {{"alpha", c.alpha}, {"decay", c.decay}, {"eps", c.eps}, {"keep_diagonal", c.keep_diagonal}};
}

mobility::GravityConfig gravity_from_json(const json& j)
{
    mobility::GravityConfig c;
    FieldReader(j, "gravity")("alpha", c.alpha)("decay", c.decay)("eps", c.eps)("keep_diagonal", c.keep_diagonal)
        .finish();
    return c;
}

json to_json(const data::FeatureOptions& c) { return {{"normalize", c.normalize}, {"log_cases", c.log_cases}}; }

data::FeatureOptions features_from_json(const json& j)
{
    data::FeatureOptions c;
    FieldReader(j, "features")("normalize", c.normalize)("log_cases", c.log_cases).finish();
    return c;
}

json to_json(const SimulateConfig& c)
{
    return {{"model", c.model}, {"beta", c.beta}, {"gamma", c.gamma}, {"days", c.days}};
}

SimulateConfig simulate_from_json(const json& j)
{
    SimulateConfig c;
    FieldReader(j, "simulate")("model", c.model)("beta", c.beta)("gamma", c.gamma)("days", c.days).finish();
    return c;
}

json to_json(const GradCheckConfig& c)
{
    return {{"regions", c.regions}, {"batch", c.batch}, {"max_entries", c.max_entries}};
}

GradCheckConfig grad_check_from_json(const json& j)
{
    GradCheckConfig c;
    FieldReader(j, "grad_check")("regions", c.regions)("batch", c.batch)("max_entries", c.max_entries).finish();
    return c;
}

json to_json(const data::FeatureStats& c)
{
    return {{"cases_mean", c.cases_mean},
            {"cases_std", c.cases_std},
            {"ratio_mean", c.ratio_mean},
            {"ratio_std", c.ratio_std}};
}

data::FeatureStats stats_from_json(const json& j)
{
    data::FeatureStats c;
    FieldReader(j, "stats")("cases_mean", c.cases_mean)("cases_std", c.cases_std)("ratio_mean", c.ratio_mean)(
        "ratio_std", c.ratio_std)
        .finish();
    return c;
}

json to_json(const data::DataPaths& c)
{
    return {{"regions", c.regions},
            {"cases", c.cases},
            {"movement", c.movement},
            {"flows_static", c.flows_static},
            {"flows_dynamic", c.flows_dynamic},
            {"unique_users", c.unique_users},
            {"distances", c.distances},
            {"truth", c.truth}};
}

data::DataPaths paths_from_json(const json& j)
{
    data::DataPaths c;
    FieldReader(j, "paths")("regions", c.regions)("cases", c.cases)("movement", c.movement)(
        "flows_static", c.flows_static)("flows_dynamic", c.flows_dynamic)("unique_users", c.unique_users)(
        "distances", c.distances)("truth", c.truth)
        .finish();
    return c;
}

json to_json(const RunConfig& c)
{
    return {{"data_dir", c.data_dir},
            {"paths", to_json(c.paths)},
            {"output_dir", c.output_dir},
            {"mode", c.mode},
            {"adaptive_init", c.adaptive_init},
            {"network", to_json(c.network)},
            {"train", to_json(c.train)},
            {"gravity", to_json(c.gravity)},
            {"features", to_json(c.features)},
            {"seeds", c.seeds},
            {"models", c.models},
            {"checkpoint", c.checkpoint},
            {"origin", c.origin},
            {"raw_flows", c.raw_flows},
            {"anchor_region", c.anchor_region},
            {"anchor_date", c.anchor_date},
            {"scenario", data::to_json(c.scenario)},
            {"seed", c.seed},
            {"simulate", to_json(c.simulate)},
            {"grad_check", to_json(c.grad_check)}};
}

RunConfig run_config_from_json(const json& j)
{
    RunConfig c;
    FieldReader(j, "config")("data_dir", c.data_dir)
        .nested("paths", c.paths, paths_from_json)("output_dir", c.output_dir)("mode", c.mode)("adaptive_init",
                                                                                             c.adaptive_init)
        .nested("network", c.network, network_from_json)
        .nested("train", c.train, train_from_json)
        .nested("gravity", c.gravity, gravity_from_json)
        .nested("features", c.features, features_from_json)("seeds", c.seeds)("models", c.models)(
            "checkpoint", c.checkpoint)("origin", c.origin)("raw_flows", c.raw_flows)("anchor_region", c.anchor_region)("anchor_date",
                                                                                             c.anchor_date)
        .nested("scenario", c.scenario, data::scenario_from_json)("seed", c.seed)
        .nested("simulate", c.simulate, simulate_from_json)
        .nested("grad_check", c.grad_check, grad_check_from_json)
        .finish();
    return c;
}

RunConfig load_run_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::Io, "cannot open config file " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorKind::Schema, path + ": " + e.what());
    }
    return run_config_from_json(j);
}

data::DataPaths resolve_paths(const RunConfig& c)
{
    data::DataPaths p;
    if (!c.data_dir.empty()) {
        p = data::DataPaths::in_directory(c.data_dir);
    }
    auto pick = [](std::string& dst, const std::string& explicit_path) {
        if (!explicit_path.empty()) {
            dst = explicit_path;
        }
    };
    pick(p.regions, c.paths.regions);
    pick(p.cases, c.paths.cases);
    pick(p.movement, c.paths.movement);
    pick(p.flows_static, c.paths.flows_static);
    pick(p.flows_dynamic, c.paths.flows_dynamic);
    pick(p.unique_users, c.paths.unique_users);
    pick(p.distances, c.paths.distances);
    pick(p.truth, c.paths.truth);
    return p;
}

std::string raw_flows_path(const RunConfig& c)
{
    if (!c.raw_flows.empty() || c.data_dir.empty()) {
        return c.raw_flows;
    }
    return (std::filesystem::path(c.data_dir) / "flows_raw.csv").string();
}

void validate(const RunConfig& c, const std::string& command)
{
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, msg); };
    if (c.mode != "adaptive" && c.mode != "dynamic") {
        bad("mode must be 'adaptive' or 'dynamic', got '" + c.mode + "'");
    }
    if (c.adaptive_init != "static_flow" && c.adaptive_init != "gravity") {
        bad("adaptive_init must be 'static_flow' or 'gravity', got '" + c.adaptive_init + "'");
    }
    mobility::validate(c.gravity);
    const auto p = resolve_paths(c);
    auto need = [&](const std::string& path, const std::string& what) {
        if (path.empty()) {
            bad(command + " needs " + what + " (set data_dir or paths)");
        }
        if (!std::filesystem::exists(path)) {
            fail(ErrorKind::Io, command + ": " + what + " not found at " + path);
        }
    };
    if (command == "train" || command == "benchmark" || command == "evaluate" || command == "forecast") {
        need(p.regions, "regions.csv");
        need(p.cases, "cases.csv");
    }
    if (command == "train") {
        net::validate(c.network);
        train::validate(c.train);
        if (c.mode == "dynamic") {
            need(p.flows_dynamic, "flows_dynamic.csv (dynamic graph mode)");
        } else if (c.adaptive_init == "gravity") {
            need(p.distances, "distances.csv (gravity-initialised adaptive graph)");
        } else {
            need(p.flows_static, "flows_static.csv (adaptive graph initialised from static flows)");
        }
    }
    if (command == "benchmark") {
        net::validate(c.network);
        train::validate(c.train);
        if (c.seeds.empty()) {
            bad("benchmark needs at least one seed");
        }
    }
    if ((command == "forecast" || command == "evaluate") && c.checkpoint.empty()) {
        bad(command + " needs a checkpoint");
    }
    if (command == "generate-mobility") {
        need(p.regions, "regions.csv");
        need(p.distances, "distances.csv");
    }
    if (command == "normalize-od") {
        need(p.regions, "regions.csv");
        need(p.cases, "cases.csv (defines the date range)");
        need(p.movement, "movement.csv");
        need(p.unique_users, "nuid.csv");
        need(raw_flows_path(c), "raw dynamic flows");
    }
    if (command == "synth") {
        data::validate(c.scenario);
    }
    if (command == "simulate") {
        need(p.regions, "regions.csv");
        need(p.cases, "cases.csv");
        const auto& m = c.simulate.model;
        if (m != "sir" && m != "metasir" && m != "mepo") {
            bad("simulate.model must be 'sir', 'metasir' or 'mepo', got '" + m + "'");
        }
        if (!(c.simulate.beta >= 0.0) || !(c.simulate.gamma >= 0.0 && c.simulate.gamma <= 1.0)) {
            bad("simulate needs beta >= 0 and gamma in [0, 1]");
        }
        if (c.simulate.days < 1) {
            bad("simulate.days must be at least 1");
        }
        if (m != "sir" && p.flows_static.empty() && p.flows_dynamic.empty() && p.distances.empty()) {
            bad("simulate with a metapopulation model needs flows_static.csv, flows_dynamic.csv or distances.csv");
        }
    }
    if (command == "grad-check") {
        net::validate(c.network);
        if (c.grad_check.regions < 1 || c.grad_check.batch < 1) {
            bad("grad_check needs at least one region and one batch item");
        }
    }
}

} // namespace mepo::app
