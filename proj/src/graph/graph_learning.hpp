#pragma once

#include "numeric/tape.hpp"

namespace mepo::graph {

using nc::Array;
using nc::Parameter;
using nc::Tape;
using nc::Var;

/// Graph shared by the spatio-temporal network (A) and the metapopulation
/// rollout (H).
struct GraphOutput
{
    Var A; // [N, N] or [B, N, N]
    Var H; // [N, N] (same graph every step) or [B, T_out, N, N]
};

/// Learnable N x N graph initialised from a flow or generated mobility
/// matrix. Negative entries read as zero. The graph is stored as
/// scale * G with a fixed scale (the mean initial entry), so G starts at
/// unit mean.
class AdaptiveGraph
{
public:
    AdaptiveGraph() = default;
    explicit AdaptiveGraph(const Array& init);

    GraphOutput output(Tape& tape);
    Parameter& weights() { return g_; }
    const Parameter& weights() const { return g_; }

    /// Current effective graph, clamped at zero and scaled.
    Array effective() const;

    double scale() const { return scale_; }
    void set_scale(double s);

private:
    Parameter g_;
    double scale_ = 1.0;
};

/// Learnable T_out x T_in time weights mapping past flows to future
/// propagation graphs. Starts at zero, i.e. uniform weights.
class DynamicGraph
{
public:
    DynamicGraph() = default;
    DynamicGraph(std::size_t t_in, std::size_t t_out);

    /// flows is [B, T_in, N, N].
    GraphOutput output(Tape& tape, Var flows);
    Parameter& weights() { return l_; }
    const Parameter& weights() const { return l_; }

    /// Softmax-normalised time weights.
    Array normalized() const;

private:
    Parameter l_;
};

struct TransitionPair
{
    Var forward;
    Var backward;
};

/// Row-normalised A and A^T; zero rows become uniform.
TransitionPair transitions(Var a);

} // namespace mepo::graph
