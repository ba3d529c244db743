#include "numeric/gradcheck.hpp"

#include "util/errors.hpp"

#include <algorithm>
#include <cstring>
#include <cmath>
#include <numeric>
#include <random>

namespace mepo::nc {

bool GradCheckReport::passed() const
{
    return std::none_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.failed; });
}

static double evaluate(const LossFn& forward)
{
    Tape tape;
    auto loss = forward(tape);
    require(loss.value().size() == 1, "grad_check: forward must return a scalar");
    return loss.value()[0];
}

GradCheckReport grad_check(const LossFn& forward, const std::vector<Parameter*>& params,
                           const GradCheckOptions& opts)
{
    require(opts.step > 0.0, "grad_check: step must be positive");
    {
        const double a = evaluate(forward);
        const double b = evaluate(forward);
        if (std::memcmp(&a, &b, sizeof(double)) != 0) {
            fail(ErrorKind::Contract, "grad_check refused: forward pass is not deterministic");
        }
    }

    {
        Tape tape;
        auto loss = forward(tape);
        backward(loss, params);
    }

    std::mt19937_64 rng(opts.seed);
    GradCheckReport report;
    for (auto* p : params) {
        if (!p->trainable) {
            continue;
        }
        std::vector<std::size_t> idx(p->value.size());
        std::iota(idx.begin(), idx.end(), 0);
        if (opts.max_entries_per_block > 0 && idx.size() > opts.max_entries_per_block) {
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(opts.max_entries_per_block);
            std::sort(idx.begin(), idx.end());
        }

        GradCheckEntry e;
        e.name = p->name;
        e.checked = idx.size();
        double scale = 0.0;
        double worst = -1.0;
        for (auto i : idx) {
            const double orig = p->value[i];
            p->value[i] = orig + opts.step;
            const double up = evaluate(forward);
            p->value[i] = orig - opts.step;
            const double down = evaluate(forward);
            p->value[i] = orig;
            const double numeric = (up - down) / (2.0 * opts.step);
            const double analytic = p->grad[i];
            scale = std::max({scale, std::abs(numeric), std::abs(analytic)});
            const double diff = std::abs(numeric - analytic);
            if (diff > worst) {
                worst = diff;
                e.worst_index = i;
                e.analytic = analytic;
                e.numeric = numeric;
            }
        }
        e.rel_error = scale > 0.0 ? std::max(worst, 0.0) / scale : 0.0;
        e.failed = !(e.rel_error <= opts.tolerance);
        report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
        report.blocks.push_back(e);
    }
    return report;
}

} // namespace mepo::nc
