#include "mepognn/mepognn.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct Override
{
    CLI::Option* option;
    std::function<void(json&)> apply;
};

struct Command
{
    CLI::App* app = nullptr;
    std::string config_path;
    std::vector<std::string> sets;
    bool quiet = false;
    std::vector<Override> overrides;
};

template <class T>
void flag(Command& cmd, const std::string& name, const std::string& pointer, const std::string& help)
{
    auto value = std::make_shared<T>();
    auto* opt = cmd.app->add_option(name, *value, help);
    cmd.overrides.push_back({opt, [value, pointer](json& j) { j[json::json_pointer(pointer)] = *value; }});
}

void common(Command& cmd)
{
    cmd.app->add_option("-c,--config", cmd.config_path, "JSON config file")->check(CLI::ExistingFile);
    cmd.app->add_option("--set", cmd.sets, "override any config key, e.g. --set train/lr=0.002");
    cmd.app->add_flag("-q,--quiet", cmd.quiet, "no progress output");
    flag<std::string>(cmd, "--data-dir", "/data_dir", "directory holding the standard input files");
    flag<std::string>(cmd, "-o,--out", "/output_dir", "artifact directory");
}

// "a/b=1" sets /a/b to the JSON value 1; values that do not parse as JSON are strings.
void apply_set(json& j, const std::string& expr)
{
    const auto eq = expr.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw CLI::ValidationError("--set", "expected key=value, got '" + expr + "'");
    }
    auto key = expr.substr(0, eq);
    if (key.front() != '/') {
        key.insert(key.begin(), '/');
    }
    const auto text = expr.substr(eq + 1);
    auto value = json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    j[json::json_pointer(key)] = value;
}

std::string take(char* s)
{
    std::string out = s == nullptr ? "" : s;
    mepo_string_free(s);
    return out;
}

int report(mepo_status st)
{
    std::cerr << "error (" << mepo_status_name(st) << "): " << mepo_last_error() << "\n";
    return static_cast<int>(st);
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

int execute(const std::string& name, const Command& cmd)
{
    char* raw = nullptr;
    auto st = cmd.config_path.empty() ? mepo_config_default(&raw) : mepo_config_load(cmd.config_path.c_str(), &raw);
    if (st != MEPO_OK) {
        return report(st);
    }
    auto cfg = json::parse(take(raw));
    for (const auto& ov : cmd.overrides) {
        if (ov.option->count() > 0) {
            ov.apply(cfg);
        }
    }
    for (const auto& s : cmd.sets) {
        apply_set(cfg, s);
    }
    st = mepo_run(name.c_str(), cfg.dump().c_str(), cmd.quiet ? nullptr : log_line, nullptr);
    if (st != MEPO_OK) {
        return report(st);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hybrid mechanistic / graph-network epidemic forecaster"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("mepognn ") + mepo_version());

    std::vector<std::unique_ptr<Command>> commands;
    auto add = [&](const std::string& name, const std::string& help) -> Command& {
        commands.push_back(std::make_unique<Command>());
        auto& cmd = *commands.back();
        cmd.app = app.add_subcommand(name, help);
        common(cmd);
        return cmd;
    };

    auto& gm = add("generate-mobility", "gravity-model flows from regions and distances");
    flag<double>(gm, "--alpha", "/gravity/alpha", "scale");
    flag<double>(gm, "--decay", "/gravity/decay", "distance exponent");
    flag<double>(gm, "--eps", "/gravity/eps", "distance offset in km");

    auto& no = add("normalize-od", "rescale sampled OD counts to population level");
    flag<std::string>(no, "--raw-flows", "/raw_flows", "raw flows CSV");
    flag<std::string>(no, "--anchor-region", "/anchor_region", "region whose stay-put count anchors the scale");
    flag<std::string>(no, "--anchor-date", "/anchor_date", "anchor day, YYYY-MM-DD");

    auto& si = add("simulate", "forward simulation with constant rates");
    flag<std::string>(si, "--model", "/simulate/model", "sir | metasir | mepo");
    flag<double>(si, "--beta", "/simulate/beta", "infection rate");
    flag<double>(si, "--gamma", "/simulate/gamma", "removal rate");
    flag<std::size_t>(si, "--days", "/simulate/days", "steps to simulate");

    auto& sy = add("synth", "write a synthetic scenario");
    flag<std::size_t>(sy, "--regions", "/scenario/regions", "region count");
    flag<std::size_t>(sy, "--days", "/scenario/days", "series length");
    flag<std::uint64_t>(sy, "--seed", "/seed", "generator seed");

    auto& tr = add("train", "fit a model and write a checkpoint");
    flag<std::string>(tr, "--mode", "/mode", "adaptive | dynamic");
    flag<std::string>(tr, "--init", "/adaptive_init", "static_flow | gravity");
    flag<std::size_t>(tr, "--epochs", "/train/max_epochs", "epoch limit");
    flag<double>(tr, "--lr", "/train/lr", "learning rate");
    flag<std::uint64_t>(tr, "--seed", "/train/seed", "initialisation and shuffling seed");

    auto& fc = add("forecast", "predict from a checkpoint");
    flag<std::string>(fc, "--checkpoint", "/checkpoint", "model.ckpt path");
    flag<std::string>(fc, "--origin", "/origin", "last observed day, YYYY-MM-DD");

    auto& ev = add("evaluate", "test-split metrics for a checkpoint");
    flag<std::string>(ev, "--checkpoint", "/checkpoint", "model.ckpt path");

    auto& be = add("benchmark", "baselines and both graph modes over several seeds");
    flag<std::vector<std::uint64_t>>(be, "--seeds", "/seeds", "training seeds");
    flag<std::vector<std::string>>(be, "--models", "/models", "rows to run");
    flag<std::size_t>(be, "--epochs", "/train/max_epochs", "epoch limit");

    auto& gc = add("grad-check", "finite-difference check of every parameter gradient");
    flag<std::string>(gc, "--mode", "/mode", "adaptive | dynamic");
    flag<std::size_t>(gc, "--regions", "/grad_check/regions", "region count");
    flag<std::size_t>(gc, "--batch", "/grad_check/batch", "batch size");

    auto* show = app.add_subcommand("config", "print the completed configuration");
    std::string show_path;
    show->add_option("-c,--config", show_path, "JSON config file")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (show->parsed()) {
            char* raw = nullptr;
            const auto st = show_path.empty() ? mepo_config_default(&raw) : mepo_config_load(show_path.c_str(), &raw);
            if (st != MEPO_OK) {
                return report(st);
            }
            std::cout << take(raw) << "\n";
            return 0;
        }
        for (const auto& cmd : commands) {
            if (cmd->app->parsed()) {
                return execute(cmd->app->get_name(), *cmd);
            }
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
