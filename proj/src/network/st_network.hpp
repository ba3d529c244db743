#pragma once

#include "graph/graph_learning.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mepo::net {

using nc::Array;
using nc::Parameter;
using nc::Tape;
using nc::Var;

struct NetworkConfig
{
    std::size_t layers = 3;
    std::size_t hidden = 32;
    std::size_t kernel = 2;
    std::vector<std::size_t> dilations{1, 2, 4};
    std::size_t diffusion_steps = 2;
    std::size_t skip = 64;
    std::size_t t_in = 14;
    std::size_t t_out = 14;
    std::size_t in_channels = 4;

    /// Input steps consumed by the stacked dilated convolutions.
    std::size_t receptive_field() const;
    /// Time length left after the last layer; mean-pooled before the heads.
    std::size_t pooled_steps() const { return t_in - receptive_field() + 1; }
};

/// Throws Config when the schedule is inconsistent or the receptive field
/// exceeds T_in.
void validate(const NetworkConfig& cfg);

/// Learnable arrays of one spatio-temporal layer.
struct StLayerParams
{
    Parameter filter_kernel; // [K, H, H]
    Parameter filter_bias;   // [H]
    Parameter gate_kernel;   // [K, H, H]
    Parameter gate_bias;     // [H]
    // diffusion mixing weights for steps 0..K, forward and backward
    std::vector<Parameter> forward_mix;
    std::vector<Parameter> backward_mix;
};

/// Gated temporal convolution: tanh(filter * z + b1) . sigmoid(gate * z + b2).
Var gated_tcn(Var z, Var filter_kernel, Var filter_bias, Var gate_kernel, Var gate_bias, std::size_t dilation);

/// sum_k P_f^k Q W_k1 + P_b^k Q W_k2 over k = 0..K, with K = forward_mix.size() - 1.
Var diffusion_gcn(Var q, const graph::TransitionPair& tp, const std::vector<Var>& forward_mix,
                  const std::vector<Var>& backward_mix);

struct DenseOutput
{
    Var next;  // Z_{l+1}
    Var dense; // D_l, cropped to the time length of next
};

/// D_l = D_{l-1} + Z_l (D_1 = the projected input); Z_{l+1} = Zt . s(Zt) + D_l . (1 - s(Zt)).
/// prev_dense is empty for the first layer. All inputs are cropped to the
/// most recent steps of their common length.
DenseOutput gated_dense(Var z_tilde, Var prev_dense, Var z_in, bool first_layer);

/// Keeps the last `steps` entries of the time axis (axis 2 of [B, N, T, C]).
Var crop_time(Var x, std::size_t steps);

struct ParamForecast
{
    Var beta;  // [B, N, T_out], >= 0
    Var gamma; // [B, N, T_out], in (0, 1)
};

class StNetwork
{
public:
    StNetwork() = default;
    StNetwork(const NetworkConfig& cfg, std::uint64_t seed);

    /// x: [B, N, T_in, C]; a: [N, N] or [B, N, N], nonnegative.
    ParamForecast forward(Tape& tape, Var x, Var a);

    const NetworkConfig& config() const { return cfg_; }
    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;

    /// Sets head biases so that the untrained outputs sit near typical rates.
    void set_output_bias(double beta, double gamma);

private:
    NetworkConfig cfg_;
    Parameter in_weight_, in_bias_;
    std::vector<StLayerParams> layers_;
    Parameter skip_weight_, skip_bias_;
    Parameter beta_weight_, beta_bias_;
    Parameter gamma_weight_, gamma_bias_;
};

} // namespace mepo::net
