#include "train/optimizer.hpp"

#include <cmath>

namespace mepo::train {

AdamW::AdamW(std::vector<nc::Parameter*> params, Options opts)
    : params_(std::move(params))
    , opts_(opts)
{
    for (auto* p : params_) {
        m_.emplace_back(p->value.size(), 0.0);
        v_.emplace_back(p->value.size(), 0.0);
    }
}

void AdamW::step()
{
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(opts_.beta2, double(t_));
    const double decay = 1.0 - opts_.lr * opts_.weight_decay;
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto* p = params_[k];
        if (!p->trainable) {
            continue;
        }
        auto w = p->value.data();
        auto g = p->grad.data();
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g[i];
            v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g[i] * g[i];
            w[i] = w[i] * decay - opts_.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts_.eps);
        }
    }
}

} // namespace mepo::train
