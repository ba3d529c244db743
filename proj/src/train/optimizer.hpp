#pragma once

#include "numeric/tape.hpp"

#include <vector>

namespace mepo::train {

/// Adaptive-moment gradient descent with decoupled weight decay.
class AdamW
{
public:
    struct Options
    {
        double lr = 1e-3;
        double weight_decay = 1e-8;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    AdamW(std::vector<nc::Parameter*> params, Options opts);

    /// Applies one update from the current grad buffers.
    void step();
    std::size_t steps() const { return t_; }

private:
    std::vector<nc::Parameter*> params_;
    Options opts_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

} // namespace mepo::train
