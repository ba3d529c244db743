#include "graph/graph_learning.hpp"

#include "numeric/ops.hpp"
#include "util/errors.hpp"

namespace mepo::graph {

AdaptiveGraph::AdaptiveGraph(const Array& init)
    : g_("graph.adaptive", init)
{
    require(init.rank() == 2 && init.dim(0) == init.dim(1), "adaptive graph must be initialised with an N x N matrix");
    double sum = 0.0;
    for (double v : init.data()) {
        require(v >= 0.0, "adaptive graph initialisation must be nonnegative");
        sum += v;
    }
    if (sum > 0.0) {
        scale_ = sum / static_cast<double>(init.size());
        for (auto& v : g_.value.data()) {
            v /= scale_;
        }
    }
}

void AdaptiveGraph::set_scale(double s)
{
    require(s > 0.0, "adaptive graph scale must be positive");
    scale_ = s;
}

GraphOutput AdaptiveGraph::output(Tape& tape)
{
    auto a = nc::scale(nc::relu(tape.leaf(g_)), scale_);
    return {a, a};
}

Array AdaptiveGraph::effective() const
{
    Array out = g_.value;
    for (auto& v : out.data()) {
        v = v > 0.0 ? v * scale_ : 0.0;
    }
    return out;
}

DynamicGraph::DynamicGraph(std::size_t t_in, std::size_t t_out)
    : l_("graph.time_weights", Array(nc::Shape{t_out, t_in}, 0.0))
{
}

GraphOutput DynamicGraph::output(Tape& tape, Var flows)
{
    require(flows.rank() == 4 && flows.dim(2) == flows.dim(3), "dynamic graph expects flows [B, T_in, N, N]");
    const auto& ls = l_.value.shape();
    if (flows.dim(1) != ls[1]) {
        fail(ErrorKind::Contract, "dynamic graph expects " + std::to_string(ls[1]) + " flow days, got " +
                                      std::to_string(flows.dim(1)));
    }
    auto weights = nc::softmax_rows(tape.leaf(l_));
    auto h = nc::mix_axis(weights, flows, 1);
    auto a = nc::mean_axis(h, 1);
    return {a, h};
}

Array DynamicGraph::normalized() const { return nc::softmax_rows(l_.value); }

TransitionPair transitions(Var a)
{
    return {nc::row_normalize(a), nc::row_normalize(nc::transpose_last2(a))};
}

} // namespace mepo::graph
