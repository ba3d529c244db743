#pragma once

#include "numeric/array.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mepo::nc {

/// A learnable array together with its gradient buffer.
struct Parameter
{
    Parameter() = default;
    Parameter(std::string name_, Array value_, bool trainable_ = true)
        : name(std::move(name_))
        , value(std::move(value_))
        , grad(value.shape())
        , trainable(trainable_)
    {
    }

    void zero_grad() { grad.fill(0.0); }

    std::string name;
    Array value;
    Array grad;
    bool trainable = true;
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
/// tape that created it is alive.
class Var
{
public:
    Var() = default;

    const Array& value() const;
    const Shape& shape() const { return value().shape(); }
    std::size_t dim(std::size_t axis) const { return value().dim(axis); }
    std::size_t rank() const { return value().rank(); }
    Tape& tape() const { return *tape_; }
    std::size_t id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id)
        : tape_(tape)
        , id_(id)
    {
    }

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Records primitive operations of one forward pass so gradients can be
/// propagated back to the Parameters that produced them. Rebuilt for every
/// forward pass; not thread-safe.
class Tape
{
public:
    // Called with the id of the node being processed; reads its gradient via
    // grad(self) and accumulates into its inputs' gradients.
    using Backprop = std::function<void(Tape&, std::size_t self)>;

    Tape() = default;
    /// With gradients disabled no node keeps a backward closure (inference).
    explicit Tape(bool grad_enabled)
        : grad_enabled_(grad_enabled)
    {
    }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Array value);
    Var leaf(Parameter& p);

    /// Appends an operation node. fn may be empty when no input needs a gradient.
    Var record(Array value, std::initializer_list<Var> inputs, Backprop fn);
    Var record(Array value, std::span<const Var> inputs, Backprop fn);

    /// Propagates d(loss)/d(node) through the tape and accumulates the result
    /// into the grad buffer of every trainable Parameter leaf.
    void backward(Var loss);

    const Array& value(std::size_t id) const { return nodes_[id].value; }
    Array& grad(std::size_t id);
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    bool needs_grad(Var v) const { return nodes_[v.id()].needs_grad; }
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node
    {
        Array value;
        Array grad;
        bool has_grad = false;
        bool needs_grad = false;
        Backprop backprop;
        Parameter* param = nullptr;
    };

    std::vector<Node> nodes_;
    bool grad_enabled_ = true;
};

/// Zeroes the grad of every listed parameter, then backpropagates loss.
/// Parameters that did not influence the loss end with a zero gradient.
void backward(Var loss, std::span<Parameter* const> params);

} // namespace mepo::nc
