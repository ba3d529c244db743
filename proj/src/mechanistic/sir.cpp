#include "mechanistic/sir.hpp"

#include "numeric/ops.hpp"
#include "util/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mepo::mech {

namespace {

void check_rates(const EpidemicState& s, const std::vector<double>& beta, const std::vector<double>& gamma)
{
    const auto n = s.regions();
    require(beta.size() == n && gamma.size() == n, "rate vectors must have one entry per region");
    for (std::size_t i = 0; i < n; ++i) {
        require(beta[i] >= 0.0 && std::isfinite(beta[i]), "infection rate must be finite and nonnegative");
        require(gamma[i] >= 0.0 && gamma[i] <= 1.0, "removal rate must lie in [0, 1]");
    }
}

void check_graph(const Array& h, std::size_t n)
{
    require(h.rank() == 2 && h.dim(0) == n && h.dim(1) == n,
            "propagation graph must be " + std::to_string(n) + "x" + std::to_string(n));
    for (double v : h.data()) {
        require(v >= 0.0 && std::isfinite(v), "propagation graph entries must be finite and nonnegative");
    }
}

// Applies infections and removals, capping infections at S.
StepResult apply(const EpidemicState& s, std::vector<double> infections, const std::vector<double>& gamma,
                 ClampCounter* clamp)
{
    StepResult r;
    r.state = s;
    for (std::size_t n = 0; n < s.regions(); ++n) {
        if (infections[n] > s.S[n]) {
            infections[n] = s.S[n];
            if (clamp) {
                ++clamp->clamped;
            }
        }
        const double removed = gamma[n] * s.I[n];
        r.state.S[n] = s.S[n] - infections[n];
        r.state.I[n] = s.I[n] + infections[n] - removed;
        r.state.R[n] = s.R[n] + removed;
    }
    r.new_cases = std::move(infections);
    return r;
}

} // namespace

std::vector<double> coupling(const EpidemicState& s, const Array& h)
{
    const auto n = s.regions();
    std::vector<double> c(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t m = 0; m < n; ++m) {
            acc += (h.at(m, i) / s.P[m] + h.at(i, m) / s.P[i]) * s.I[m];
        }
        c[i] = acc;
    }
    return c;
}

StepResult sir_step(const EpidemicState& s, const SirParams& p, ClampCounter* clamp)
{
    check_rates(s, p.beta, p.gamma);
    std::vector<double> inf(s.regions());
    for (std::size_t n = 0; n < s.regions(); ++n) {
        inf[n] = p.beta[n] * s.S[n] * s.I[n] / s.P[n];
    }
    return apply(s, std::move(inf), p.gamma, clamp);
}

StepResult metasir_step_original(const EpidemicState& s, const SirParams& p, const Array& h, ClampCounter* clamp)
{
    check_rates(s, p.beta, p.gamma);
    check_graph(h, s.regions());
    auto c = coupling(s, h);
    for (std::size_t n = 0; n < s.regions(); ++n) {
        c[n] *= p.beta[n] * s.S[n];
    }
    return apply(s, std::move(c), p.gamma, clamp);
}

StepResult mepo_step(const EpidemicState& s, const std::vector<double>& beta, const std::vector<double>& gamma,
                     const Array& h, ClampCounter* clamp)
{
    check_rates(s, beta, gamma);
    check_graph(h, s.regions());
    auto c = coupling(s, h);
    for (std::size_t n = 0; n < s.regions(); ++n) {
        c[n] *= beta[n];
    }
    return apply(s, std::move(c), gamma, clamp);
}

Array mepo_rollout(const EpidemicState& s0, const Array& beta, const Array& gamma, const Array& h,
                   ClampCounter* clamp)
{
    const auto n = s0.regions();
    require(beta.rank() == 2 && beta.dim(0) == n && gamma.shape() == beta.shape(),
            "rollout parameters must be [N, T_out]");
    const auto steps = beta.dim(1);
    const bool dynamic = h.rank() == 3;
    if (dynamic) {
        require(h.dim(0) >= steps && h.dim(1) == n && h.dim(2) == n, "dynamic graph must be [T_out, N, N]");
    }
    Array out(nc::Shape{n, steps});
    EpidemicState s = s0;
    Array slice(nc::Shape{n, n});
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<double> b(n), g(n);
        for (std::size_t i = 0; i < n; ++i) {
            b[i] = beta.at(i, t);
            g[i] = gamma.at(i, t);
        }
        const Array* ht = &h;
        if (dynamic) {
            std::copy_n(&h[t * n * n], n * n, &slice[0]);
            ht = &slice;
        }
        auto r = mepo_step(s, b, g, *ht, clamp);
        for (std::size_t i = 0; i < n; ++i) {
            out.at(i, t) = r.new_cases[i];
        }
        s = std::move(r.state);
    }
    return out;
}

StateVars state_vars(nc::Tape& tape, const std::vector<const EpidemicState*>& batch)
{
    require(!batch.empty(), "state_vars: empty batch");
    const auto b = batch.size();
    const auto n = batch[0]->regions();
    Array s(nc::Shape{b, n}), i(nc::Shape{b, n}), r(nc::Shape{b, n});
    for (std::size_t k = 0; k < b; ++k) {
        require(batch[k]->regions() == n, "state_vars: region count differs within batch");
        for (std::size_t m = 0; m < n; ++m) {
            s.at(k, m) = batch[k]->S[m];
            i.at(k, m) = batch[k]->I[m];
            r.at(k, m) = batch[k]->R[m];
        }
    }
    return {tape.constant(std::move(s)), tape.constant(std::move(i)), tape.constant(std::move(r))};
}

RolloutVars mepo_rollout(StateVars s0, nc::Var beta, nc::Var gamma, nc::Var h, nc::Var inv_pop, std::size_t steps)
{
    using namespace nc;
    require(beta.rank() == 3 && beta.shape() == gamma.shape(), "rollout: beta and gamma must be [B, N, T]");
    require(beta.dim(2) >= steps && steps >= 1, "rollout: parameters cover fewer steps than requested");
    const bool per_step = h.rank() == 4;
    Var h_t;
    Var h_tr;
    if (!per_step) {
        h_t = h;
        h_tr = transpose_last2(h);
    }
    RolloutVars out;
    StateVars s = s0;
    std::vector<Var> cases;
    for (std::size_t t = 0; t < steps; ++t) {
        if (per_step) {
            h_t = select(h, 1, t);
            h_tr = transpose_last2(h_t);
        }
        auto b_t = select(beta, 2, t);
        auto g_t = select(gamma, 2, t);
        // sum_m h_mn I_m / P_m  +  (1 / P_n) sum_m h_nm I_m
        auto inbound = node_mix(h_tr, mul_suffix(s.I, inv_pop));
        auto outbound = mul_suffix(node_mix(h_t, s.I), inv_pop);
        auto raw = mul(b_t, add(inbound, outbound));
        auto infections = minimum(raw, s.S);
        {
            const auto& rv = raw.value();
            const auto& sv = s.S.value();
            for (std::size_t k = 0; k < rv.size(); ++k) {
                if (rv[k] > sv[k]) {
                    ++out.clamped;
                }
            }
        }
        auto removed = mul(g_t, s.I);
        StateVars next;
        next.S = sub(s.S, infections);
        next.I = sub(add(s.I, infections), removed);
        next.R = add(s.R, removed);
        cases.push_back(infections);
        s = next;
    }
    out.cases = stack_last(cases);
    out.final_state = s;
    return out;
}

} // namespace mepo::mech
