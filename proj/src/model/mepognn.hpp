#pragma once

#include "data/epi_data.hpp"
#include "graph/graph_learning.hpp"
#include "mechanistic/sir.hpp"
#include "network/st_network.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mepo::model {

using nc::Array;
using nc::Parameter;
using nc::Tape;
using nc::Var;

enum class GraphMode { Adaptive, Dynamic };

std::string to_string(GraphMode m);
GraphMode parse_graph_mode(const std::string& s);

/// Stacked windows ready for one forward pass.
struct Batch
{
    Array features;             // [B, N, T_in, C]
    std::optional<Array> flows; // [B, T_in, N, N]
    std::vector<const data::EpidemicState*> states;
    Array target;  // [B, N, T_out]
    Array inv_pop; // [N]

    std::size_t size() const { return states.size(); }
};

Batch make_batch(const std::vector<data::Window>& windows, const std::vector<std::size_t>& indices);

struct Output
{
    Var cases; // [B, N, steps]
    net::ParamForecast params;
    Var A; // graph fed to the network
    Var H; // graph fed to the rollout
    std::size_t clamped = 0;
};

/// Spatio-temporal network plus one graph learner plus the metapopulation
/// rollout, trained end to end.
class MepoGnn
{
public:
    MepoGnn() = default;

    static MepoGnn adaptive(const net::NetworkConfig& cfg, const Array& graph_init, std::uint64_t seed);
    static MepoGnn dynamic(const net::NetworkConfig& cfg, std::uint64_t seed);

    /// Rolls the metapopulation model `steps` days ahead (1 <= steps <= T_out).
    Output forward(Tape& tape, const Batch& batch, std::size_t steps);

    GraphMode mode() const { return mode_; }
    const net::NetworkConfig& config() const { return net_.config(); }
    net::StNetwork& network() { return net_; }
    graph::AdaptiveGraph& adaptive_graph() { return adaptive_; }
    const graph::AdaptiveGraph& adaptive_graph() const { return adaptive_; }
    graph::DynamicGraph& dynamic_graph() { return dynamic_; }
    const graph::DynamicGraph& dynamic_graph() const { return dynamic_; }

    std::vector<Parameter*> parameters();
    std::vector<const Parameter*> parameters() const;
    Parameter* find(const std::string& name);

private:
    GraphMode mode_ = GraphMode::Adaptive;
    net::StNetwork net_;
    graph::AdaptiveGraph adaptive_;
    graph::DynamicGraph dynamic_;
};

struct RateGuess
{
    double beta = 0.0;
    double gamma = 0.0;
};

/// Medians of the rates implied by consecutive observed states over days
/// [begin, end - 1): beta = cases(t+1) / coupling(t), gamma = removed(t+1) / I(t).
/// graph_at(t) returns the propagation graph in force on day t.
RateGuess implied_rates(const std::vector<data::EpidemicState>& states, const Array& daily_confirmed,
                        std::size_t begin, std::size_t end, const std::function<Array(std::size_t)>& graph_at);

} // namespace mepo::model
