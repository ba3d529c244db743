#pragma once

#include "data/date.hpp"
#include "numeric/array.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mepo::data {

using nc::Array;

struct Region
{
    std::string id;
    double population = 0.0;
};

/// Ordered region list; the order defines region indices everywhere else.
using RegionTable = std::vector<Region>;

void validate_regions(const RegionTable& regions);
std::vector<double> populations(const RegionTable& regions);
std::size_t largest_region(const RegionTable& regions);

/// Daily confirmed cases and cumulative removed (recovered + deceased), both
/// [N, T] with region rows.
struct EpidemicSeries
{
    Array daily_confirmed;
    Array cum_removed;

    std::size_t regions() const { return daily_confirmed.dim(0); }
    std::size_t days() const { return daily_confirmed.dim(1); }
};

/// Compartments of every region at one day.
struct EpidemicState
{
    std::vector<double> S;
    std::vector<double> I;
    std::vector<double> R;
    std::vector<double> P;

    std::size_t regions() const { return P.size(); }
    /// max over regions of |S + I + R - P| / P
    double conservation_error() const;
};

/// Cumulative confirmed on day t is the running sum of daily confirmed up to t.
/// R = cum_removed, I = cum_confirmed - R, S = P - I - R.
std::vector<EpidemicState> derive_states(const EpidemicSeries& series, const RegionTable& regions,
                                         const Date& start);

struct Subregion
{
    std::size_t region = 0; // index of the enclosing region
    double value = 0.0;
    double population = 0.0;
};

/// Population-weighted mean of subregion values per region.
std::vector<double> weighted_movement(std::span<const Subregion> subregions, std::size_t regions);

/// Per-region, per-day sampling of the mobility panel ([N, T] arrays).
struct SampleRateTable
{
    Array stay_put;
    Array unique_users;
    Array active_population;
    Array sample_rate;
};

SampleRateTable sample_rates(const RegionTable& regions, const Array& stay_put, const Array& unique_users);

struct Anchor
{
    std::size_t region = 0;
    std::size_t day = 0;
};

/// Rescales raw OD flows ([T, N, N], day-major, origin row) so every origin-day
/// is expressed at the anchor's sample rate.
Array normalize_od(const Array& raw_flows, const SampleRateTable& rates, Anchor anchor, const Date& start);

/// Complete input data of one study area. Flow stacks are stored [T, N, N].
struct Dataset
{
    RegionTable regions;
    Date start;
    EpidemicSeries cases;
    Array movement_change; // [N, T]
    Array stay_put;        // [N, T]
    std::optional<Array> flows_static;
    std::optional<Array> flows_dynamic;
    std::optional<Array> unique_users;
    std::optional<Array> distances;
    // Generator ground truth, [N, T] each; only present for synthetic data.
    std::optional<Array> true_beta;
    std::optional<Array> true_gamma;

    std::size_t regions_count() const { return regions.size(); }
    std::size_t days() const { return cases.days(); }
    Date date(std::size_t day) const { return start.plus(static_cast<long>(day)); }
};

inline constexpr std::size_t kFeatureChannels = 4;

struct FeatureOptions
{
    // z-score the case and case-ratio channels with training-range statistics
    bool normalize = true;
    // cases enter as log1p(cases) so that magnitudes far above the training range stay bounded
    bool log_cases = true;
};

struct FeatureStats
{
    double cases_mean = 0.0;
    double cases_std = 1.0;
    double ratio_mean = 0.0;
    double ratio_std = 1.0;
};

/// Node features [N, T, 4]: daily cases, movement change, daily / active
/// cases, day of week. stats are computed over days [0, stats_days).
Array build_features(const Dataset& ds, const std::vector<EpidemicState>& states, std::size_t stats_days,
                     const FeatureOptions& opts, FeatureStats& stats);

/// Applies previously computed statistics (used at forecast time).
Array build_features(const Dataset& ds, const std::vector<EpidemicState>& states, const FeatureOptions& opts,
                     const FeatureStats& stats);

struct Window
{
    std::size_t origin = 0;     // index of the last input day t
    Array features;             // [N, T_in, C]
    std::optional<Array> flows; // [T_in, N, N]
    EpidemicState state;        // state on day t
    Array target;               // [N, T_out] daily confirmed on t+1 .. t+T_out
    bool has_target = true;     // false when the horizon runs past the data (target is zero)
};

struct SplitRange
{
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive
};

struct SplitPlan
{
    SplitRange train, val, test;
};

/// Date boundaries at floor(T*6/8) and floor(T*7/8). When the validation or
/// test range cannot hold one full window, every day is assigned to training.
SplitPlan plan_splits(std::size_t days, std::size_t t_in, std::size_t t_out);

struct WindowSets
{
    SplitPlan plan;
    std::vector<Window> train, val, test;
};

WindowSets build_windows(const Array& features, const std::optional<Array>& flows,
                         const std::vector<EpidemicState>& states, const Array& daily_confirmed, std::size_t t_in,
                         std::size_t t_out);

/// A single window ending on day `origin`, regardless of split. The target
/// is left at zero when the horizon extends past the last day.
Window make_window(const Array& features, const std::optional<Array>& flows,
                   const std::vector<EpidemicState>& states, const Array& daily_confirmed, std::size_t origin,
                   std::size_t t_in, std::size_t t_out);

} // namespace mepo::data
