#pragma once

#include "numeric/array.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mepo::train {

using nc::Array;

struct Metrics
{
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> mape; // percent; absent when every target is zero
    std::optional<double> rae;  // absent when the targets are constant
    std::size_t count = 0;
    std::size_t mape_skipped = 0; // zero targets left out of MAPE
};

/// Metrics over all paired values.
Metrics metrics(std::span<const double> pred, std::span<const double> target);
Metrics metrics(const Array& pred, const Array& target);

inline const std::vector<std::size_t> kReportHorizons{3, 7, 14};

struct HorizonMetrics
{
    std::size_t horizon = 0;
    Metrics m;
};

struct MetricReport
{
    Metrics overall;
    std::vector<HorizonMetrics> horizons;
};

/// pred and target are [W, N, T_out]. Horizon h uses step h only; horizons
/// beyond T_out are skipped.
MetricReport report(const Array& pred, const Array& target, const std::vector<std::size_t>& horizons = kReportHorizons);

/// Mean with a normal-approximation 95% half-width; the half-width is absent
/// for fewer than two values.
struct Summary
{
    double mean = 0.0;
    std::optional<double> ci;
    std::size_t runs = 0;
};

Summary summarize(std::span<const double> values);

/// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

} // namespace mepo::train
