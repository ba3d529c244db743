#pragma once

#include "data/epi_data.hpp"

namespace mepo::mobility {

/// alpha scales the magnitude, decay is the distance exponent and eps guards
/// the zero-distance diagonal. Defaults follow the published prefecture setup.
struct GravityConfig
{
    double alpha = 1e-6;
    double decay = 1.7;
    double eps = 9.0;
    bool keep_diagonal = true;
};

void validate(const GravityConfig& cfg);

/// Relative mobility intensity alpha * P_n * P_m / (dist^decay + eps).
/// dist is [N, N] in kilometres, symmetric with a zero diagonal.
nc::Array generate(const data::RegionTable& regions, const nc::Array& dist, const GravityConfig& cfg);

struct Centroid
{
    double lat = 0.0;
    double lon = 0.0;
};

double great_circle_km(const Centroid& a, const Centroid& b);
nc::Array distance_matrix(const std::vector<Centroid>& centroids);

} // namespace mepo::mobility
