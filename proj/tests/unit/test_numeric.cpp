#include "numeric/gradcheck.hpp"
#include "numeric/ops.hpp"
#include "util/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace mepo;
using namespace mepo::nc;

namespace {

Array random_array(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    Array a(std::move(shape));
    for (auto& v : a.data()) {
        v = d(rng);
    }
    return a;
}

} // namespace

TEST_CASE("softmax rows: hand values")
{
    auto u = softmax_rows(Array::from2d({{0.0, 0.0}, {0.0, 0.0}}));
    for (std::size_t k = 0; k < 4; ++k) {
        CHECK(u[k] == doctest::Approx(0.5).epsilon(1e-15));
    }
    auto r = softmax_rows(Array::from2d({{0.0, std::log(3.0)}}));
    CHECK(std::abs(r[0] - 0.25) < 1e-15);
    CHECK(std::abs(r[1] - 0.75) < 1e-15);
    for (double c : {-700.0, -3.5, 0.0, 42.0, 700.0}) {
        auto s = softmax_rows(Array::from2d({{c, c}}));
        CHECK(s[0] == 0.5);
        CHECK(s[1] == 0.5);
    }
}

TEST_CASE("softmax rows: non-finite input is rejected")
{
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(softmax_rows(Array::from2d({{0.0, inf}})), Error);
    CHECK_THROWS_AS(softmax_rows(Array::from2d({{std::nan(""), 1.0}})), Error);
}

TEST_CASE("property: softmax rows are a distribution")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<std::size_t> dim(1, 9);
    for (int trial = 0; trial < 300; ++trial) {
        const auto rows = dim(rng), cols = dim(rng);
        auto s = softmax_rows(random_array({rows, cols}, rng, -50.0, 50.0));
        for (std::size_t i = 0; i < rows; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                CHECK(s.at(i, j) >= 0.0);
                sum += s.at(i, j);
            }
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("autodiff: identity and square")
{
    Parameter p("p", Array::scalar(3.0));
    {
        Tape t;
        t.backward(t.leaf(p));
        CHECK(p.grad[0] == 1.0);
    }
    p.zero_grad();
    {
        Tape t;
        auto x = t.leaf(p);
        t.backward(mul(x, x));
        CHECK(p.grad[0] == 6.0);
    }
}

TEST_CASE("autodiff: gradients accumulate across uses")
{
    Parameter p("p", Array::from({1.0, -2.0}));
    Tape t;
    auto x = t.leaf(p);
    t.backward(sum_all(add(scale(x, 3.0), x)));
    CHECK(p.grad[0] == 4.0);
    CHECK(p.grad[1] == 4.0);
}

TEST_CASE("inference tape records no gradients")
{
    Parameter p("p", Array::scalar(2.0));
    Tape t(false);
    auto y = mul(t.leaf(p), t.leaf(p));
    CHECK(y.value()[0] == 4.0);
    CHECK_FALSE(t.needs_grad(y));
}

TEST_CASE("grad check: linear map is exact")
{
    std::mt19937_64 rng(3);
    Parameter w("w", random_array({4, 3}, rng));
    const auto x = random_array({5, 4}, rng);
    const auto c = random_array({5, 3}, rng);
    auto loss = [&](Tape& t) { return sum_all(mul(matmul_last(t.constant(x), t.leaf(w)), t.constant(c))); };
    auto rep = grad_check(loss, {&w});
    CHECK(rep.passed());
    CHECK(rep.max_rel_error < 1e-10);
}

TEST_CASE("grad check: elementwise and reduction ops")
{
    std::mt19937_64 rng(5);
    Parameter a("a", random_array({2, 3, 4}, rng));
    Parameter b("b", random_array({4}, rng, 0.5, 1.5));
    Parameter m("m", random_array({3, 3}, rng, 0.1, 1.0));
    auto loss = [&](Tape& t) {
        auto x = t.leaf(a);
        auto y = add_suffix(mul_suffix(nc::tanh(x), t.leaf(b)), t.leaf(b));
        auto z = add(softplus(y), sigmoid(scale(y, -0.5)));
        auto rn = row_normalize(t.leaf(m));
        auto mixed = mix_axis(rn, z, 1);
        auto sm = softmax_rows(t.leaf(m));
        return add(mean_all(mul(mixed, mixed)), sum_all(mul(sm, rn)));
    };
    auto rep = grad_check(loss, {&a, &b, &m});
    CHECK(rep.passed());
}

TEST_CASE("conv_time matches a direct convolution loop")
{
    std::mt19937_64 rng(7);
    const std::size_t B = 2, N = 2, T = 5, C = 3, D = 2, K = 2;
    for (std::size_t dilation : {1u, 2u}) {
        const auto x = random_array({B, N, T, C}, rng);
        const auto w = random_array({K, C, D}, rng);
        Tape tape;
        auto y = conv_time(tape.constant(x), tape.constant(w), dilation).value();
        const auto tout = T - (K - 1) * dilation;
        REQUIRE(y.shape() == Shape{B, N, tout, D});
        for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t n = 0; n < N; ++n) {
                for (std::size_t t = 0; t < tout; ++t) {
                    for (std::size_t d = 0; d < D; ++d) {
                        double ref = 0.0;
                        for (std::size_t k = 0; k < K; ++k) {
                            for (std::size_t c = 0; c < C; ++c) {
                                ref += x[((b * N + n) * T + t + k * dilation) * C + c] * w[(k * C + c) * D + d];
                            }
                        }
                        CHECK(std::abs(y[((b * N + n) * tout + t) * D + d] - ref) < 1e-12);
                    }
                }
            }
        }
    }
}

TEST_CASE("grad check: convolution and region mixing")
{
    std::mt19937_64 rng(9);
    Parameter w("w", random_array({2, 3, 2}, rng));
    Parameter p("p", random_array({2, 3, 3}, rng, 0.0, 1.0));
    const auto x = random_array({2, 3, 6, 3}, rng);
    auto loss = [&](Tape& t) {
        auto y = conv_time(t.constant(x), t.leaf(w), 2);
        auto mixed = node_mix(t.leaf(p), y);
        return sum_all(mul(mixed, nc::tanh(mixed)));
    };
    CHECK(grad_check(loss, {&w, &p}).passed());
}

TEST_CASE("row_normalize: zero rows become uniform")
{
    Tape t;
    auto r = row_normalize(t.constant(Array::from2d({{2.0, 6.0, 2.0}, {0.0, 0.0, 0.0}}))).value();
    CHECK(r.at(0, 0) == doctest::Approx(0.2));
    CHECK(r.at(0, 1) == doctest::Approx(0.6));
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(r.at(1, j) == doctest::Approx(1.0 / 3.0));
    }
}

TEST_CASE("shape mismatches are contract errors")
{
    Tape t;
    auto a = t.constant(Array(Shape{2, 3}));
    auto b = t.constant(Array(Shape{3, 2}));
    CHECK_THROWS_AS(add(a, b), Error);
    CHECK_THROWS_AS(matmul_last(a, a), Error);
}
