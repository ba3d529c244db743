#pragma once

#include "numeric/tape.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace mepo::nc {

struct GradCheckOptions
{
    double step = 1e-5;
    double tolerance = 1e-4;
    // 0 checks every entry; otherwise a seeded sample of this many entries per block.
    std::size_t max_entries_per_block = 0;
    std::uint64_t seed = 0;
};

struct GradCheckEntry
{
    std::string name;
    std::size_t checked = 0;
    // worst entry of the block
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    // max |analytic - numeric| over the block, divided by the block's largest
    // gradient magnitude (analytic or numeric)
    double rel_error = 0.0;
    bool failed = false;
};

struct GradCheckReport
{
    std::vector<GradCheckEntry> blocks;
    double max_rel_error = 0.0;
    bool passed() const;
};

/// forward builds a scalar loss on the given tape from the current values of
/// params. Refuses (throws Contract) when two evaluations at the same point
/// differ.
using LossFn = std::function<Var(Tape&)>;

GradCheckReport grad_check(const LossFn& forward, const std::vector<Parameter*>& params,
                           const GradCheckOptions& opts = {});

} // namespace mepo::nc
