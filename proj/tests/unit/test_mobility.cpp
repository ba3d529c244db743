#include "mobility/gravity.hpp"
#include "util/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mepo;
using namespace mepo::mobility;

TEST_CASE("gravity: published parameters on one pair")
{
    const data::RegionTable regions{{"n", 1e6}, {"m", 1e6}};
    const auto dist = nc::Array::from2d({{0.0, 100.0}, {100.0, 0.0}});
    const GravityConfig cfg; // 1e-6, 1.7, 9
    const auto g = generate(regions, dist, cfg);
    const double expected = 1e-6 * 1e6 * 1e6 / (std::pow(100.0, 1.7) + 9.0);
    CHECK(g.at(0, 1) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(std::round(g.at(0, 1) * 100.0) / 100.0 == 396.69);
    CHECK(g.at(0, 0) == doctest::Approx(1e-6 * 1e12 / 9.0).epsilon(1e-14));

    GravityConfig no_diag;
    no_diag.keep_diagonal = false;
    CHECK(generate(regions, dist, no_diag).at(1, 1) == 0.0);
}

TEST_CASE("property: gravity is bilinear in population and symmetric")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> pop(1e4, 1e7), km(1.0, 1500.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial % 6;
        data::RegionTable regions, doubled;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = pop(rng);
            regions.push_back({"r" + std::to_string(i), p});
            doubled.push_back({"r" + std::to_string(i), 2.0 * p});
        }
        nc::Array dist(nc::Shape{n, n});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                dist.at(i, j) = dist.at(j, i) = km(rng);
            }
        }
        const auto a = generate(regions, dist, {});
        const auto b = generate(doubled, dist, {});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                CHECK(b.at(i, j) == doctest::Approx(4.0 * a.at(i, j)).epsilon(1e-13));
                CHECK(a.at(i, j) == a.at(j, i));
                CHECK(a.at(i, j) >= 0.0);
            }
        }
    }
}

TEST_CASE("gravity: invalid inputs")
{
    const data::RegionTable regions{{"n", 1e6}, {"m", 1e6}};
    const auto dist = nc::Array::from2d({{0.0, -1.0}, {-1.0, 0.0}});
    CHECK_THROWS_AS(generate(regions, dist, {}), Error);
    GravityConfig bad;
    bad.eps = 0.0;
    CHECK_THROWS_AS(generate(regions, nc::Array(nc::Shape{2, 2}), bad), Error);
    CHECK_THROWS_AS(generate(regions, nc::Array(nc::Shape{3, 3}), {}), Error);
}

TEST_CASE("great-circle distances")
{
    const Centroid tokyo{35.6895, 139.6917}, osaka{34.6937, 135.5023};
    const double d = great_circle_km(tokyo, osaka);
    CHECK(d > 390.0);
    CHECK(d < 405.0);
    CHECK(great_circle_km(tokyo, tokyo) == 0.0);
    const auto m = distance_matrix({tokyo, osaka});
    CHECK(m.at(0, 1) == m.at(1, 0));
    CHECK(m.at(0, 0) == 0.0);
}
