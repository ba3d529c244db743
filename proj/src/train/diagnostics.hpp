#pragma once

#include "model/mepognn.hpp"
#include "numeric/gradcheck.hpp"

#include <cstdint>

namespace mepo::train {

struct ModelGradCheck
{
    std::size_t regions = 3;
    std::size_t batch = 2;
    model::GraphMode mode = model::GraphMode::Adaptive;
    std::uint64_t seed = 0;
    nc::GradCheckOptions options;
};

/// Builds a seeded random model and batch for cfg and compares the gradient
/// of a random linear functional of the forecast against central finite
/// differences, block by block.
nc::GradCheckReport model_grad_check(const net::NetworkConfig& cfg, const ModelGradCheck& check);

} // namespace mepo::train
