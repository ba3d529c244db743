#include "mobility/gravity.hpp"

#include "util/errors.hpp"

#include <cmath>
#include <numbers>

namespace mepo::mobility {

void validate(const GravityConfig& cfg)
{
    if (!(cfg.alpha > 0.0) || !(cfg.decay > 0.0) || !(cfg.eps > 0.0)) {
        fail(ErrorKind::Config, "gravity parameters alpha, decay and eps must all be strictly positive");
    }
}

nc::Array generate(const data::RegionTable& regions, const nc::Array& dist, const GravityConfig& cfg)
{
    validate(cfg);
    const auto n = regions.size();
    if (dist.rank() != 2 || dist.dim(0) != n || dist.dim(1) != n) {
        fail(ErrorKind::Config, "distance matrix must be " + std::to_string(n) + "x" + std::to_string(n));
    }
    for (const auto& r : regions) {
        if (!(r.population > 0.0)) {
            fail(ErrorKind::Config, "region '" + r.id + "' has nonpositive population");
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (dist.at(i, j) < 0.0 || !std::isfinite(dist.at(i, j))) {
                fail(ErrorKind::Config, "negative or non-finite distance between '" + regions[i].id + "' and '" +
                                            regions[j].id + "'");
            }
        }
    }
    nc::Array out(nc::Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j && !cfg.keep_diagonal) {
                continue;
            }
            // symmetric by construction: use the lower-index ordering for both halves
            const auto a = std::min(i, j), b = std::max(i, j);
            const double d = 0.5 * (dist.at(a, b) + dist.at(b, a));
            out.at(i, j) = cfg.alpha * regions[a].population * regions[b].population / (std::pow(d, cfg.decay) + cfg.eps);
        }
    }
    return out;
}

double great_circle_km(const Centroid& a, const Centroid& b)
{
    constexpr double earth_radius_km = 6371.0088;
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * earth_radius_km * std::asin(std::min(1.0, std::sqrt(h)));
}

nc::Array distance_matrix(const std::vector<Centroid>& centroids)
{
    const auto n = centroids.size();
    nc::Array d(nc::Shape{n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            d.at(i, j) = d.at(j, i) = great_circle_km(centroids[i], centroids[j]);
        }
    }
    return d;
}

} // namespace mepo::mobility
