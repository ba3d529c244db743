#include "numeric/tape.hpp"

#include "util/errors.hpp"

namespace mepo::nc {

const Array& Var::value() const
{
    require(tape_ != nullptr, "use of an unbound Var");
    return tape_->value(id_);
}

Var Tape::constant(Array value)
{
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Parameter& p)
{
    Node n;
    n.value = p.value;
    n.needs_grad = grad_enabled_ && p.trainable;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Array value, std::initializer_list<Var> inputs, Backprop fn)
{
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Array value, std::span<const Var> inputs, Backprop fn)
{
    Node n;
    n.value = std::move(value);
    for (const auto& in : inputs) {
        require(&in.tape() == this, "Var from a different tape");
        n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
    }
    if (n.needs_grad) {
        n.backprop = std::move(fn);
    }
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Array& Tape::grad(std::size_t id)
{
    auto& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Array(n.value.shape(), 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::backward(Var loss)
{
    require(&loss.tape() == this, "loss Var from a different tape");
    require(loss.value().size() == 1, "backward requires a scalar loss, got shape " + shape_str(loss.shape()));
    grad(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (!n.has_grad || !n.needs_grad) {
            continue;
        }
        if (n.backprop) {
            n.backprop(*this, i);
        }
        if (n.param != nullptr && n.param->trainable) {
            auto dst = n.param->grad.data();
            auto src = n.grad.data();
            for (std::size_t k = 0; k < dst.size(); ++k) {
                dst[k] += src[k];
            }
        }
    }
}

void backward(Var loss, std::span<Parameter* const> params)
{
    for (auto* p : params) {
        p->zero_grad();
    }
    loss.tape().backward(loss);
}

} // namespace mepo::nc
