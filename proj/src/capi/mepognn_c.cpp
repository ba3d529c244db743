#include "mepognn/mepognn.h"

#include "app/config.hpp"
#include "app/runner.hpp"
#include "data/dataset_io.hpp"
#include "data/synth.hpp"
#include "mechanistic/sir.hpp"
#include "train/pipeline.hpp"
#include "util/errors.hpp"

#include <cstdlib>
#include <cstring>
#include <new>
#include <ostream>
#include <streambuf>
#include <string>
#include <vector>

struct mepo_dataset
{
    mepo::data::Dataset ds;
};

struct mepo_model
{
    mepo::train::TrainedModel tm;
};

namespace {

thread_local std::string g_last_error;

mepo_status status_of(mepo::ErrorKind k)
{
    switch (k) {
    case mepo::ErrorKind::Io: return MEPO_ERR_IO;
    case mepo::ErrorKind::Schema: return MEPO_ERR_SCHEMA;
    case mepo::ErrorKind::DataIntegrity: return MEPO_ERR_DATA;
    case mepo::ErrorKind::Config: return MEPO_ERR_CONFIG;
    case mepo::ErrorKind::NumericDomain: return MEPO_ERR_NUMERIC;
    case mepo::ErrorKind::Contract: return MEPO_ERR_CONTRACT;
    }
    return MEPO_ERR_INTERNAL;
}

struct ArgumentError
{
    std::string what;
};

template <class F>
mepo_status guarded(F&& f)
{
    try {
        f();
        g_last_error.clear();
        return MEPO_OK;
    } catch (const ArgumentError& e) {
        g_last_error = e.what;
        return MEPO_ERR_ARGUMENT;
    } catch (const mepo::Error& e) {
        g_last_error = e.what();
        return status_of(e.kind());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = std::string("invalid JSON: ") + e.what();
        return MEPO_ERR_CONFIG;
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return MEPO_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return MEPO_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return MEPO_ERR_INTERNAL;
    }
}

void need(const void* p, const char* name)
{
    if (p == nullptr) {
        throw ArgumentError{std::string(name) + " must not be NULL"};
    }
}

char* dup_string(const std::string& s)
{
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

mepo::app::RunConfig parse_config(const char* json_text)
{
    need(json_text, "config_json");
    return mepo::app::run_config_from_json(nlohmann::json::parse(json_text));
}

// Forwards complete lines to the caller's callback.
class LineBuf : public std::streambuf
{
public:
    LineBuf(mepo_log_fn fn, void* user)
        : fn_(fn)
        , user_(user)
    {
    }
    ~LineBuf() override { flush_line(); }

protected:
    int_type overflow(int_type ch) override
    {
        if (ch == traits_type::eof()) {
            return traits_type::not_eof(ch);
        }
        if (ch == '\n') {
            flush_line();
        } else {
            line_.push_back(static_cast<char>(ch));
        }
        return ch;
    }

private:
    void flush_line()
    {
        if (fn_ != nullptr && !line_.empty()) {
            fn_(line_.c_str(), user_);
        }
        line_.clear();
    }

    mepo_log_fn fn_;
    void* user_;
    std::string line_;
};

std::vector<const char*> command_table()
{
    std::vector<const char*> t;
    for (const auto& c : mepo::app::kCommands) {
        t.push_back(c.c_str());
    }
    t.push_back(nullptr);
    return t;
}

} // namespace

extern "C" {

const char* mepo_version(void) { return mepo::app::kToolVersion; }

const char* mepo_status_name(mepo_status status)
{
    switch (status) {
    case MEPO_OK: return "ok";
    case MEPO_ERR_IO: return "io";
    case MEPO_ERR_SCHEMA: return "schema";
    case MEPO_ERR_DATA: return "data";
    case MEPO_ERR_CONFIG: return "config";
    case MEPO_ERR_NUMERIC: return "numeric";
    case MEPO_ERR_CONTRACT: return "contract";
    case MEPO_ERR_ARGUMENT: return "argument";
    case MEPO_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* mepo_last_error(void) { return g_last_error.c_str(); }

void mepo_string_free(char* s) { std::free(s); }

const char* const* mepo_commands(void)
{
    static const std::vector<const char*> table = command_table();
    return table.data();
}

mepo_status mepo_config_default(char** out_json)
{
    return guarded([&] {
        need(out_json, "out_json");
        *out_json = dup_string(mepo::app::to_json(mepo::app::RunConfig{}).dump(2));
    });
}

mepo_status mepo_config_load(const char* path, char** out_json)
{
    return guarded([&] {
        need(path, "path");
        need(out_json, "out_json");
        *out_json = dup_string(mepo::app::to_json(mepo::app::load_run_config(path)).dump(2));
    });
}

mepo_status mepo_config_normalize(const char* json, char** out_json)
{
    return guarded([&] {
        need(out_json, "out_json");
        *out_json = dup_string(mepo::app::to_json(parse_config(json)).dump(2));
    });
}

mepo_status mepo_run(const char* command, const char* config_json, mepo_log_fn log, void* user)
{
    return guarded([&] {
        need(command, "command");
        const auto cfg = parse_config(config_json);
        LineBuf buf(log, user);
        std::ostream os(&buf);
        mepo::app::run(command, cfg, os);
    });
}

mepo_status mepo_dataset_load(const char* config_json, mepo_dataset** out)
{
    return guarded([&] {
        need(out, "out");
        *out = nullptr;
        const auto cfg = parse_config(config_json);
        auto ds = mepo::data::load_dataset(mepo::app::resolve_paths(cfg));
        *out = new mepo_dataset{std::move(ds)};
    });
}

mepo_status mepo_dataset_synth(const char* scenario_json, uint64_t seed, mepo_dataset** out)
{
    return guarded([&] {
        need(out, "out");
        *out = nullptr;
        mepo::data::ScenarioConfig sc;
        if (scenario_json != nullptr) {
            sc = mepo::data::scenario_from_json(nlohmann::json::parse(scenario_json));
        }
        auto scenario = mepo::data::synth_scenario(sc, seed);
        *out = new mepo_dataset{std::move(scenario.dataset)};
    });
}

void mepo_dataset_free(mepo_dataset* ds) { delete ds; }

size_t mepo_dataset_regions(const mepo_dataset* ds) { return ds == nullptr ? 0 : ds->ds.regions_count(); }

size_t mepo_dataset_days(const mepo_dataset* ds) { return ds == nullptr ? 0 : ds->ds.cases.days(); }

mepo_status mepo_dataset_cases(const mepo_dataset* ds, double* out, size_t len)
{
    return guarded([&] {
        need(ds, "ds");
        need(out, "out");
        const auto& c = ds->ds.cases.daily_confirmed;
        if (len != c.size()) {
            throw ArgumentError{"cases buffer holds " + std::to_string(len) + " values, need " +
                                std::to_string(c.size())};
        }
        std::memcpy(out, c.data().data(), c.size() * sizeof(double));
    });
}

mepo_status mepo_model_load(const char* checkpoint_path, mepo_model** out)
{
    return guarded([&] {
        need(checkpoint_path, "checkpoint_path");
        need(out, "out");
        *out = nullptr;
        auto tm = mepo::train::load_model(checkpoint_path);
        *out = new mepo_model{std::move(tm)};
    });
}

void mepo_model_free(mepo_model* m) { delete m; }

size_t mepo_model_horizon(const mepo_model* m) { return m == nullptr ? 0 : m->tm.spec.network.t_out; }

mepo_status mepo_model_forecast(mepo_model* m, const mepo_dataset* ds, size_t origin, double* cases, double* beta,
                                double* gamma, size_t len)
{
    return guarded([&] {
        need(m, "m");
        need(ds, "ds");
        need(cases, "cases");
        const auto expected = ds->ds.regions_count() * m->tm.spec.network.t_out;
        if (len != expected) {
            throw ArgumentError{"forecast buffers hold " + std::to_string(len) + " values, need " +
                                std::to_string(expected)};
        }
        const auto f = mepo::train::forecast(m->tm, ds->ds, origin);
        std::memcpy(cases, f.cases.data().data(), len * sizeof(double));
        if (beta != nullptr) {
            std::memcpy(beta, f.beta.data().data(), len * sizeof(double));
        }
        if (gamma != nullptr) {
            std::memcpy(gamma, f.gamma.data().data(), len * sizeof(double));
        }
    });
}

mepo_status mepo_step(size_t n, double* S, double* I, double* R, const double* P, const double* beta,
                      const double* gamma, const double* h, double* new_cases)
{
    return guarded([&] {
        need(S, "S");
        need(I, "I");
        need(R, "R");
        need(P, "P");
        need(beta, "beta");
        need(gamma, "gamma");
        need(h, "h");
        need(new_cases, "new_cases");
        if (n == 0) {
            throw ArgumentError{"n must be positive"};
        }
        mepo::data::EpidemicState s;
        s.S.assign(S, S + n);
        s.I.assign(I, I + n);
        s.R.assign(R, R + n);
        s.P.assign(P, P + n);
        mepo::nc::Array hm(mepo::nc::Shape{n, n});
        std::memcpy(hm.data().data(), h, n * n * sizeof(double));
        const auto r = mepo::mech::mepo_step(s, std::vector<double>(beta, beta + n),
                                             std::vector<double>(gamma, gamma + n), hm);
        for (size_t i = 0; i < n; ++i) {
            S[i] = r.state.S[i];
            I[i] = r.state.I[i];
            R[i] = r.state.R[i];
            new_cases[i] = r.new_cases[i];
        }
    });
}

} // extern "C"
