#include "model/mepognn.hpp"

#include "numeric/ops.hpp"
#include "util/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mepo::model {

std::string to_string(GraphMode m) { return m == GraphMode::Adaptive ? "adaptive" : "dynamic"; }

GraphMode parse_graph_mode(const std::string& s)
{
    if (s == "adaptive" || s == "adp") {
        return GraphMode::Adaptive;
    }
    if (s == "dynamic" || s == "dyn") {
        return GraphMode::Dynamic;
    }
    fail(ErrorKind::Config, "unknown graph mode '" + s + "' (expected adaptive or dynamic)");
}

Batch make_batch(const std::vector<data::Window>& windows, const std::vector<std::size_t>& indices)
{
    require(!indices.empty(), "make_batch: empty batch");
    const auto& first = windows.at(indices[0]);
    const auto n = first.features.dim(0);
    const auto t_in = first.features.dim(1);
    const auto c = first.features.dim(2);
    const auto t_out = first.target.dim(1);
    const auto b = indices.size();

    Batch out;
    out.features = Array(nc::Shape{b, n, t_in, c});
    out.target = Array(nc::Shape{b, n, t_out});
    if (first.flows) {
        out.flows = Array(nc::Shape{b, t_in, n, n});
    }
    const auto fsz = first.features.size();
    const auto tsz = first.target.size();
    const auto osz = first.flows ? first.flows->size() : 0;
    for (std::size_t k = 0; k < b; ++k) {
        const auto& w = windows.at(indices[k]);
        require(w.features.shape() == first.features.shape() && w.target.shape() == first.target.shape(),
                "make_batch: windows differ in shape");
        std::copy(w.features.data().begin(), w.features.data().end(), out.features.data().begin() + k * fsz);
        std::copy(w.target.data().begin(), w.target.data().end(), out.target.data().begin() + k * tsz);
        if (out.flows) {
            require(w.flows.has_value(), "make_batch: window without flows in a dynamic batch");
            std::copy(w.flows->data().begin(), w.flows->data().end(), out.flows->data().begin() + k * osz);
        }
        out.states.push_back(&w.state);
    }
    out.inv_pop = Array(nc::Shape{n});
    for (std::size_t i = 0; i < n; ++i) {
        out.inv_pop[i] = 1.0 / first.state.P[i];
    }
    return out;
}

MepoGnn MepoGnn::adaptive(const net::NetworkConfig& cfg, const Array& graph_init, std::uint64_t seed)
{
    MepoGnn m;
    m.mode_ = GraphMode::Adaptive;
    m.net_ = net::StNetwork(cfg, seed);
    m.adaptive_ = graph::AdaptiveGraph(graph_init);
    return m;
}

MepoGnn MepoGnn::dynamic(const net::NetworkConfig& cfg, std::uint64_t seed)
{
    MepoGnn m;
    m.mode_ = GraphMode::Dynamic;
    m.net_ = net::StNetwork(cfg, seed);
    m.dynamic_ = graph::DynamicGraph(cfg.t_in, cfg.t_out);
    return m;
}

Output MepoGnn::forward(Tape& tape, const Batch& batch, std::size_t steps)
{
    const auto& cfg = net_.config();
    require(steps >= 1 && steps <= cfg.t_out, "forward: rollout steps must lie in [1, T_out]");
    graph::GraphOutput g;
    if (mode_ == GraphMode::Adaptive) {
        const auto n = batch.features.dim(1);
        if (adaptive_.weights().value.dim(0) != n) {
            fail(ErrorKind::Contract, "model graph has " + std::to_string(adaptive_.weights().value.dim(0)) +
                                          " regions, input has " + std::to_string(n));
        }
        g = adaptive_.output(tape);
    } else {
        if (!batch.flows) {
            fail(ErrorKind::Contract, "dynamic graph mode needs dynamic flows for every window");
        }
        g = dynamic_.output(tape, tape.constant(*batch.flows));
    }
    Output out;
    out.A = g.A;
    out.H = g.H;
    out.params = net_.forward(tape, tape.constant(batch.features), g.A);
    auto roll = mech::mepo_rollout(mech::state_vars(tape, batch.states), out.params.beta, out.params.gamma, g.H,
                                   tape.constant(batch.inv_pop), steps);
    out.cases = roll.cases;
    out.clamped = roll.clamped;
    return out;
}

std::vector<Parameter*> MepoGnn::parameters()
{
    auto ps = net_.parameters();
    ps.push_back(mode_ == GraphMode::Adaptive ? &adaptive_.weights() : &dynamic_.weights());
    return ps;
}

std::vector<const Parameter*> MepoGnn::parameters() const
{
    auto ps = const_cast<MepoGnn*>(this)->parameters();
    return {ps.begin(), ps.end()};
}

Parameter* MepoGnn::find(const std::string& name)
{
    for (auto* p : parameters()) {
        if (p->name == name) {
            return p;
        }
    }
    return nullptr;
}

namespace {

double median(std::vector<double> v)
{
    if (v.empty()) {
        return 0.0;
    }
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = (m + *std::max_element(v.begin(), v.begin() + mid)) / 2;
    }
    return m;
}

} // namespace

RateGuess implied_rates(const std::vector<data::EpidemicState>& states, const Array& daily_confirmed,
                        std::size_t begin, std::size_t end, const std::function<Array(std::size_t)>& graph_at)
{
    std::vector<double> betas, gammas;
    end = std::min(end, states.size());
    for (std::size_t t = begin; t + 1 < end; ++t) {
        const auto& s = states[t];
        const auto c = mech::coupling(s, graph_at(t));
        for (std::size_t n = 0; n < s.regions(); ++n) {
            if (c[n] > 0.0) {
                betas.push_back(daily_confirmed.at(n, t + 1) / c[n]);
            }
            if (s.I[n] > 0.0) {
                gammas.push_back((states[t + 1].R[n] - s.R[n]) / s.I[n]);
            }
        }
    }
    RateGuess g;
    g.beta = std::max(median(betas), 1e-6);
    g.gamma = std::clamp(median(gammas), 1e-4, 1.0 - 1e-4);
    return g;
}

} // namespace mepo::model
