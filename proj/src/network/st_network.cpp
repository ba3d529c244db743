#include "network/st_network.hpp"

#include "numeric/ops.hpp"
#include "util/errors.hpp"

#include <cmath>
#include <random>

namespace mepo::net {

using namespace nc;

std::size_t NetworkConfig::receptive_field() const
{
    std::size_t rf = 1;
    for (auto d : dilations) {
        rf += (kernel - 1) * d;
    }
    return rf;
}

void validate(const NetworkConfig& cfg)
{
    auto bad = [](const std::string& msg) { fail(ErrorKind::Config, "network config: " + msg); };
    if (cfg.layers < 1) {
        bad("at least one layer is required");
    }
    if (cfg.dilations.size() != cfg.layers) {
        bad("dilation schedule has " + std::to_string(cfg.dilations.size()) + " entries for " +
            std::to_string(cfg.layers) + " layers");
    }
    for (auto d : cfg.dilations) {
        if (d < 1) {
            bad("dilations must be >= 1");
        }
    }
    if (cfg.kernel < 2) {
        bad("kernel width must be >= 2");
    }
    if (cfg.diffusion_steps < 1) {
        bad("diffusion steps K must be >= 1");
    }
    if (cfg.hidden < 1 || cfg.skip < 1 || cfg.in_channels < 1 || cfg.t_in < 1 || cfg.t_out < 1) {
        bad("widths and lengths must be positive");
    }
    if (cfg.receptive_field() > cfg.t_in) {
        bad("receptive field " + std::to_string(cfg.receptive_field()) + " exceeds T_in = " +
            std::to_string(cfg.t_in));
    }
}

Var crop_time(Var x, std::size_t steps)
{
    const auto t = x.dim(2);
    require(steps >= 1 && steps <= t, "crop_time: cannot keep " + std::to_string(steps) + " of " + std::to_string(t));
    if (steps == t) {
        return x;
    }
    return slice(x, 2, t - steps, t);
}

Var gated_tcn(Var z, Var filter_kernel, Var filter_bias, Var gate_kernel, Var gate_bias, std::size_t dilation)
{
    auto filt = nc::tanh(add_suffix(conv_time(z, filter_kernel, dilation), filter_bias));
    auto gate = sigmoid(add_suffix(conv_time(z, gate_kernel, dilation), gate_bias));
    return mul(filt, gate);
}

Var diffusion_gcn(Var q, const graph::TransitionPair& tp, const std::vector<Var>& forward_mix,
                  const std::vector<Var>& backward_mix)
{
    require(!forward_mix.empty() && forward_mix.size() == backward_mix.size(),
            "diffusion_gcn: need matching forward and backward weights");
    Var acc = add(matmul_last(q, forward_mix[0]), matmul_last(q, backward_mix[0]));
    Var fwd = q;
    Var bwd = q;
    for (std::size_t k = 1; k < forward_mix.size(); ++k) {
        fwd = node_mix(tp.forward, fwd);
        bwd = node_mix(tp.backward, bwd);
        acc = add(acc, add(matmul_last(fwd, forward_mix[k]), matmul_last(bwd, backward_mix[k])));
    }
    return acc;
}

DenseOutput gated_dense(Var z_tilde, Var prev_dense, Var z_in, bool first_layer)
{
    const auto t_in = z_in.dim(2);
    Var dense = first_layer ? z_in : add(crop_time(prev_dense, t_in), z_in);
    auto gate = sigmoid(z_tilde);
    auto next = add(mul(z_tilde, gate), mul(crop_time(dense, z_tilde.dim(2)), one_minus(gate)));
    return {next, dense};
}

namespace {

Parameter uniform_param(const std::string& name, Shape shape, std::size_t fan_in, std::mt19937_64& rng)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Array a(std::move(shape));
    for (auto& v : a.data()) {
        v = dist(rng);
    }
    return Parameter(name, std::move(a));
}

Parameter zero_param(const std::string& name, Shape shape) { return Parameter(name, Array(std::move(shape), 0.0)); }

void check_finite(Var v, const std::string& where)
{
    if (!v.value().all_finite()) {
        fail(ErrorKind::NumericDomain, "non-finite value in " + where);
    }
}

} // namespace

StNetwork::StNetwork(const NetworkConfig& cfg, std::uint64_t seed)
    : cfg_(cfg)
{
    validate(cfg_);
    std::mt19937_64 rng(seed);
    const auto h = cfg_.hidden;
    const auto k = cfg_.kernel;
    in_weight_ = uniform_param("input.weight", {cfg_.in_channels, h}, cfg_.in_channels, rng);
    in_bias_ = zero_param("input.bias", {h});
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        const auto prefix = "layer" + std::to_string(l) + ".";
        StLayerParams p;
        p.filter_kernel = uniform_param(prefix + "tcn.filter", {k, h, h}, k * h, rng);
        p.filter_bias = zero_param(prefix + "tcn.filter_bias", {h});
        p.gate_kernel = uniform_param(prefix + "tcn.gate", {k, h, h}, k * h, rng);
        p.gate_bias = zero_param(prefix + "tcn.gate_bias", {h});
        const auto fan = (cfg_.diffusion_steps + 1) * 2 * h;
        for (std::size_t s = 0; s <= cfg_.diffusion_steps; ++s) {
            p.forward_mix.push_back(uniform_param(prefix + "gcn.fwd" + std::to_string(s), {h, h}, fan, rng));
            p.backward_mix.push_back(uniform_param(prefix + "gcn.bwd" + std::to_string(s), {h, h}, fan, rng));
        }
        layers_.push_back(std::move(p));
    }
    const auto concat = cfg_.layers * h;
    skip_weight_ = uniform_param("skip.weight", {concat, cfg_.skip}, concat, rng);
    skip_bias_ = zero_param("skip.bias", {cfg_.skip});
    beta_weight_ = uniform_param("head.beta.weight", {cfg_.skip, cfg_.t_out}, cfg_.skip, rng);
    beta_bias_ = zero_param("head.beta.bias", {cfg_.t_out});
    gamma_weight_ = uniform_param("head.gamma.weight", {cfg_.skip, cfg_.t_out}, cfg_.skip, rng);
    gamma_bias_ = zero_param("head.gamma.bias", {cfg_.t_out});
}

void StNetwork::set_output_bias(double beta, double gamma)
{
    require(beta > 0.0 && gamma > 0.0 && gamma < 1.0, "set_output_bias: rates out of range");
    // inverse softplus and inverse logistic
    const double b = beta > 30.0 ? beta : std::log(std::expm1(beta));
    const double g = std::log(gamma / (1.0 - gamma));
    beta_bias_.value.fill(b);
    gamma_bias_.value.fill(g);
}

ParamForecast StNetwork::forward(Tape& tape, Var x, Var a)
{
    require(x.rank() == 4, "network input must be [B, N, T_in, C]");
    if (x.dim(2) != cfg_.t_in || x.dim(3) != cfg_.in_channels) {
        fail(ErrorKind::Contract, "network input " + shape_str(x.shape()) + " does not match T_in = " +
                                      std::to_string(cfg_.t_in) + ", C = " + std::to_string(cfg_.in_channels));
    }
    const auto tp = graph::transitions(a);
    auto z = add_suffix(matmul_last(x, tape.leaf(in_weight_)), tape.leaf(in_bias_));
    Var dense;
    std::vector<Var> skips;
    for (std::size_t l = 0; l < cfg_.layers; ++l) {
        auto& p = layers_[l];
        auto q = gated_tcn(z, tape.leaf(p.filter_kernel), tape.leaf(p.filter_bias), tape.leaf(p.gate_kernel),
                           tape.leaf(p.gate_bias), cfg_.dilations[l]);
        std::vector<Var> fw, bw;
        for (std::size_t s = 0; s <= cfg_.diffusion_steps; ++s) {
            fw.push_back(tape.leaf(p.forward_mix[s]));
            bw.push_back(tape.leaf(p.backward_mix[s]));
        }
        auto z_tilde = diffusion_gcn(q, tp, fw, bw);
        auto out = gated_dense(z_tilde, dense, z, l == 0);
        check_finite(out.next, "spatio-temporal layer " + std::to_string(l));
        dense = out.dense;
        z = out.next;
        skips.push_back(z);
    }
    const auto steps = z.dim(2);
    for (auto& s : skips) {
        s = crop_time(s, steps);
    }
    auto fused = nc::tanh(add_suffix(matmul_last(concat_last(skips), tape.leaf(skip_weight_)), tape.leaf(skip_bias_)));
    auto pooled = mean_axis(fused, 2);
    ParamForecast f;
    f.beta = softplus(add_suffix(matmul_last(pooled, tape.leaf(beta_weight_)), tape.leaf(beta_bias_)));
    f.gamma = sigmoid(add_suffix(matmul_last(pooled, tape.leaf(gamma_weight_)), tape.leaf(gamma_bias_)));
    check_finite(f.beta, "beta head");
    check_finite(f.gamma, "gamma head");
    return f;
}

std::vector<Parameter*> StNetwork::parameters()
{
    std::vector<Parameter*> out{&in_weight_, &in_bias_};
    for (auto& p : layers_) {
        out.insert(out.end(), {&p.filter_kernel, &p.filter_bias, &p.gate_kernel, &p.gate_bias});
        for (auto& w : p.forward_mix) {
            out.push_back(&w);
        }
        for (auto& w : p.backward_mix) {
            out.push_back(&w);
        }
    }
    out.insert(out.end(), {&skip_weight_, &skip_bias_, &beta_weight_, &beta_bias_, &gamma_weight_, &gamma_bias_});
    return out;
}

std::vector<const Parameter*> StNetwork::parameters() const
{
    auto* self = const_cast<StNetwork*>(this);
    auto ps = self->parameters();
    return {ps.begin(), ps.end()};
}

} // namespace mepo::net
