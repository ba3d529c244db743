#include "graph/graph_learning.hpp"
#include "network/st_network.hpp"
#include "numeric/gradcheck.hpp"
#include "numeric/ops.hpp"
#include "util/errors.hpp"

#include <doctest.h>

#include <cmath>
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

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// [N, C] x [C, D] for a single (b, t) slice of [B, N, T, C]
Array slice_bt(const Array& x, std::size_t b, std::size_t t)
{
    const auto N = x.dim(1), T = x.dim(2), C = x.dim(3);
    Array out(Shape{N, C});
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            out.at(n, c) = x[((b * N + n) * T + t) * C + c];
        }
    }
    return out;
}

Array matmul(const Array& a, const Array& b)
{
    Array out(Shape{a.dim(0), b.dim(1)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        for (std::size_t j = 0; j < b.dim(1); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.dim(1); ++k) {
                s += a.at(i, k) * b.at(k, j);
            }
            out.at(i, j) = s;
        }
    }
    return out;
}

Array row_norm(const Array& a)
{
    Array out(a.shape());
    const auto n = a.dim(1);
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += a.at(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) {
            out.at(i, j) = s > 0.0 ? a.at(i, j) / s : 1.0 / double(n);
        }
    }
    return out;
}

Array transpose(const Array& a)
{
    Array out(Shape{a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i) {
        for (std::size_t j = 0; j < a.dim(1); ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

} // namespace

TEST_CASE("adaptive graph starts at its initialisation and clamps negatives")
{
    const auto u = Array::from2d({{300.0, 20.0, 5.0}, {18.0, 250.0, 0.0}, {4.0, 1.0, 120.0}});
    graph::AdaptiveGraph g(u);
    const auto eff = g.effective();
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(eff[k] == doctest::Approx(u[k]).epsilon(1e-14));
    }
    Tape t;
    auto out = g.output(t);
    for (std::size_t k = 0; k < u.size(); ++k) {
        CHECK(out.A.value()[k] == doctest::Approx(u[k]).epsilon(1e-14));
        CHECK(out.H.value()[k] == doctest::Approx(u[k]).epsilon(1e-14));
    }
    g.weights().value.at(0, 1) = -5.0;
    CHECK(g.effective().at(0, 1) == 0.0);
    CHECK_THROWS_AS(g.set_scale(0.0), Error);
}

TEST_CASE("dynamic graph: time weighting of past flows")
{
    SUBCASE("zero logits give the time mean of the flows")
    {
        std::mt19937_64 rng(1);
        graph::DynamicGraph g(4, 3);
        const auto flows = random_array({2, 4, 3, 3}, rng, 0.0, 10.0);
        Tape t;
        auto out = g.output(t, t.constant(flows));
        REQUIRE(out.H.shape() == Shape{2, 3, 3, 3});
        REQUIRE(out.A.shape() == Shape{2, 3, 3});
        for (std::size_t b = 0; b < 2; ++b) {
            for (std::size_t k = 0; k < 9; ++k) {
                double mean = 0.0;
                for (std::size_t s = 0; s < 4; ++s) {
                    mean += flows[(b * 4 + s) * 9 + k] / 4.0;
                }
                for (std::size_t o = 0; o < 3; ++o) {
                    CHECK(out.H.value()[(b * 3 + o) * 9 + k] == doctest::Approx(mean).epsilon(1e-14));
                }
                CHECK(out.A.value()[b * 9 + k] == doctest::Approx(mean).epsilon(1e-14));
            }
        }
    }
    SUBCASE("single region, two days")
    {
        graph::DynamicGraph g(2, 1);
        Tape t;
        auto out = g.output(t, t.constant(Array(Shape{1, 2, 1, 1}, std::vector<double>{1.0, 3.0})));
        CHECK(out.H.value()[0] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(out.A.value()[0] == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("zero flows give a zero graph")
    {
        graph::DynamicGraph g(3, 2);
        g.weights().value.at(0, 1) = 1.7;
        Tape t;
        auto out = g.output(t, t.constant(Array(Shape{1, 3, 2, 2}, 0.0)));
        for (double v : out.H.value().data()) {
            CHECK(v == 0.0);
        }
    }
}

TEST_CASE("transition matrices")
{
    Tape t;
    auto id = graph::transitions(t.constant(Array::from2d({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})));
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(id.forward.value().at(i, j) == (i == j ? 1.0 : 0.0));
            CHECK(id.backward.value().at(i, j) == (i == j ? 1.0 : 0.0));
        }
    }
    auto tp = graph::transitions(t.constant(Array::from2d({{2, 6, 2}, {0, 0, 0}, {1, 0, 3}})));
    CHECK(tp.forward.value().at(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(tp.forward.value().at(0, 1) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(tp.forward.value().at(1, 2) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("property: transition rows sum to one")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 8;
        auto a = random_array({n, n}, rng, 0.0, 1e4);
        if (trial % 5 == 0) {
            for (std::size_t j = 0; j < n; ++j) {
                a.at(0, j) = 0.0;
            }
        }
        Tape t;
        auto tp = graph::transitions(t.constant(a));
        for (const auto& m : {tp.forward.value(), tp.backward.value()}) {
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    s += m.at(i, j);
                }
                CHECK(std::abs(s - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("gated temporal convolution")
{
    std::mt19937_64 rng(3);
    const std::size_t B = 1, N = 2, T = 5, H = 3, K = 2;
    Tape t;
    SUBCASE("zero input and bias give zero")
    {
        auto y = net::gated_tcn(t.constant(Array(Shape{B, N, T, H})), t.constant(random_array({K, H, H}, rng)),
                                t.constant(Array(Shape{H})), t.constant(random_array({K, H, H}, rng)),
                                t.constant(Array(Shape{H})), 1);
        for (double v : y.value().data()) {
            CHECK(v == 0.0);
        }
    }
    SUBCASE("saturated gate passes the tanh branch")
    {
        const auto x = random_array({B, N, T, H}, rng);
        const auto wf = random_array({K, H, H}, rng);
        const auto bf = random_array({H}, rng);
        auto y = net::gated_tcn(t.constant(x), t.constant(wf), t.constant(bf), t.constant(Array(Shape{K, H, H})),
                                t.constant(Array(Shape{H}, 50.0)), 2);
        auto ref = nc::tanh(add_suffix(conv_time(t.constant(x), t.constant(wf), 2), t.constant(bf)));
        for (std::size_t k = 0; k < y.value().size(); ++k) {
            CHECK(y.value()[k] == doctest::Approx(ref.value()[k]).epsilon(1e-15));
        }
    }
    SUBCASE("random case against a direct loop")
    {
        const auto x = random_array({B, N, T, H}, rng);
        const auto wf = random_array({K, H, H}, rng), wg = random_array({K, H, H}, rng);
        const auto bf = random_array({H}, rng), bg = random_array({H}, rng);
        const std::size_t dil = 2, tout = T - dil;
        auto y = net::gated_tcn(t.constant(x), t.constant(wf), t.constant(bf), t.constant(wg), t.constant(bg), dil)
                     .value();
        REQUIRE(y.shape() == Shape{B, N, tout, H});
        for (std::size_t n = 0; n < N; ++n) {
            for (std::size_t s = 0; s < tout; ++s) {
                for (std::size_t d = 0; d < H; ++d) {
                    double f = bf[d], g = bg[d];
                    for (std::size_t k = 0; k < K; ++k) {
                        for (std::size_t c = 0; c < H; ++c) {
                            const double xv = x[(n * T + s + k * dil) * H + c];
                            f += xv * wf[(k * H + c) * H + d];
                            g += xv * wg[(k * H + c) * H + d];
                        }
                    }
                    CHECK(std::abs(y[(n * tout + s) * H + d] - std::tanh(f) * sigmoid(g)) < 1e-12);
                }
            }
        }
    }
}

TEST_CASE("grad check: gated temporal convolution alone")
{
    std::mt19937_64 rng(4);
    Parameter wf("wf", random_array({2, 3, 3}, rng)), wg("wg", random_array({2, 3, 3}, rng));
    Parameter bf("bf", random_array({3}, rng)), bg("bg", random_array({3}, rng));
    const auto x = random_array({2, 2, 6, 3}, rng);
    const auto c = random_array({2, 2, 4, 3}, rng);
    auto loss = [&](Tape& t) {
        return sum_all(mul(net::gated_tcn(t.constant(x), t.leaf(wf), t.leaf(bf), t.leaf(wg), t.leaf(bg), 2),
                           t.constant(c)));
    };
    CHECK(grad_check(loss, {&wf, &bf, &wg, &bg}).passed());
}

TEST_CASE("diffusion graph convolution")
{
    std::mt19937_64 rng(6);
    const std::size_t N = 3, C = 2;
    Tape t;
    SUBCASE("no diffusion steps sums the two zero-step projections")
    {
        const auto q = random_array({1, N, 1, C}, rng);
        const auto w1 = random_array({C, C}, rng), w2 = random_array({C, C}, rng);
        auto tp = graph::transitions(t.constant(random_array({N, N}, rng, 0.0, 1.0)));
        auto z = net::diffusion_gcn(t.constant(q), tp, {t.constant(w1)}, {t.constant(w2)}).value();
        Array wsum(Shape{C, C});
        for (std::size_t k = 0; k < wsum.size(); ++k) {
            wsum[k] = w1[k] + w2[k];
        }
        const auto ref = matmul(slice_bt(q, 0, 0), wsum);
        for (std::size_t k = 0; k < ref.size(); ++k) {
            CHECK(z[k] == doctest::Approx(ref[k]).epsilon(1e-14));
        }
    }
    SUBCASE("identity transitions and identity weights double the input")
    {
        const auto q = random_array({1, N, 1, C}, rng);
        const auto eye = Array::from2d({{1, 0}, {0, 1}});
        auto tp = graph::transitions(t.constant(Array::from2d({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}})));
        auto z = net::diffusion_gcn(t.constant(q), tp, {t.constant(eye)}, {t.constant(eye)}).value();
        for (std::size_t k = 0; k < q.size(); ++k) {
            CHECK(z[k] == doctest::Approx(2.0 * q[k]).epsilon(1e-15));
        }
    }
    SUBCASE("chain graph with two steps against explicit matrix powers")
    {
        const auto a = Array::from2d({{0, 1, 0}, {0, 0, 1}, {0, 0, 0}});
        const auto q = random_array({1, N, 1, C}, rng);
        std::vector<Array> wf, wb;
        std::vector<Var> vf, vb;
        for (int k = 0; k < 3; ++k) {
            wf.push_back(random_array({C, C}, rng));
            wb.push_back(random_array({C, C}, rng));
            vf.push_back(t.constant(wf.back()));
            vb.push_back(t.constant(wb.back()));
        }
        auto tp = graph::transitions(t.constant(a));
        auto z = net::diffusion_gcn(t.constant(q), tp, vf, vb).value();

        const auto pf = row_norm(a), pb = row_norm(transpose(a));
        const auto q0 = slice_bt(q, 0, 0);
        auto ref = matmul(q0, wf[0]);
        const auto add_to = [&](const Array& m) {
            for (std::size_t k = 0; k < ref.size(); ++k) {
                ref[k] += m[k];
            }
        };
        add_to(matmul(q0, wb[0]));
        add_to(matmul(matmul(pf, q0), wf[1]));
        add_to(matmul(matmul(pb, q0), wb[1]));
        add_to(matmul(matmul(matmul(pf, pf), q0), wf[2]));
        add_to(matmul(matmul(matmul(pb, pb), q0), wb[2]));
        for (std::size_t k = 0; k < ref.size(); ++k) {
            CHECK(z[k] == doctest::Approx(ref[k]).epsilon(1e-13));
        }
    }
}

TEST_CASE("grad check: diffusion convolution with two steps")
{
    std::mt19937_64 rng(8);
    std::vector<Parameter> ws;
    for (int k = 0; k < 6; ++k) {
        ws.emplace_back("w" + std::to_string(k), random_array({3, 3}, rng));
    }
    Parameter adj("adj", random_array({4, 4}, rng, 0.1, 1.0));
    const auto q = random_array({2, 4, 3, 3}, rng);
    const auto c = random_array({2, 4, 3, 3}, rng);
    auto loss = [&](Tape& t) {
        std::vector<Var> f{t.leaf(ws[0]), t.leaf(ws[1]), t.leaf(ws[2])};
        std::vector<Var> b{t.leaf(ws[3]), t.leaf(ws[4]), t.leaf(ws[5])};
        auto tp = graph::transitions(t.leaf(adj));
        return sum_all(mul(net::diffusion_gcn(t.constant(q), tp, f, b), t.constant(c)));
    };
    std::vector<Parameter*> params{&adj};
    for (auto& w : ws) {
        params.push_back(&w);
    }
    CHECK(grad_check(loss, params).passed());
}

TEST_CASE("gated dense connection")
{
    std::mt19937_64 rng(10);
    Tape t;
    const auto z_in = random_array({1, 2, 4, 3}, rng);
    const auto prev = random_array({1, 2, 6, 3}, rng);
    SUBCASE("zero update halves the dense sum")
    {
        auto out = net::gated_dense(t.constant(Array(Shape{1, 2, 4, 3})), t.constant(prev), t.constant(z_in), false);
        for (std::size_t n = 0; n < 2; ++n) {
            for (std::size_t s = 0; s < 4; ++s) {
                for (std::size_t c = 0; c < 3; ++c) {
                    const double d = prev[(n * 6 + s + 2) * 3 + c] + z_in[(n * 4 + s) * 3 + c];
                    CHECK(out.dense.value()[(n * 4 + s) * 3 + c] == doctest::Approx(d).epsilon(1e-15));
                    CHECK(out.next.value()[(n * 4 + s) * 3 + c] == doctest::Approx(d / 2.0).epsilon(1e-15));
                }
            }
        }
    }
    SUBCASE("random case against scalar loop")
    {
        const auto zt = random_array({1, 2, 3, 3}, rng, -3.0, 3.0);
        auto out = net::gated_dense(t.constant(zt), t.constant(prev), t.constant(z_in), false);
        for (std::size_t n = 0; n < 2; ++n) {
            for (std::size_t s = 0; s < 3; ++s) {
                for (std::size_t c = 0; c < 3; ++c) {
                    const double d = prev[(n * 6 + s + 3) * 3 + c] + z_in[(n * 4 + s + 1) * 3 + c];
                    const double z = zt[(n * 3 + s) * 3 + c];
                    const double g = sigmoid(z);
                    CHECK(out.next.value()[(n * 3 + s) * 3 + c] == doctest::Approx(z * g + d * (1 - g)).epsilon(1e-14));
                }
            }
        }
    }
}

TEST_CASE("network heads: shapes and ranges")
{
    net::NetworkConfig cfg;
    cfg.layers = 2;
    cfg.dilations = {1, 2};
    cfg.hidden = 8;
    cfg.skip = 8;
    cfg.t_in = 8;
    cfg.t_out = 5;
    std::mt19937_64 rng(12);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        net::StNetwork m(cfg, seed);
        Tape t(false);
        const auto x = random_array({2, 3, cfg.t_in, cfg.in_channels}, rng, -5.0, 5.0);
        auto f = m.forward(t, t.constant(x), t.constant(random_array({3, 3}, rng, 0.0, 100.0)));
        REQUIRE(f.beta.shape() == Shape{2, 3, cfg.t_out});
        REQUIRE(f.gamma.shape() == Shape{2, 3, cfg.t_out});
        for (double v : f.beta.value().data()) {
            CHECK(v >= 0.0);
        }
        for (double v : f.gamma.value().data()) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("network config validation")
{
    net::NetworkConfig cfg;
    cfg.t_in = 4; // receptive field of the default stack is 8
    CHECK_THROWS_AS(net::validate(cfg), Error);
    net::NetworkConfig mismatch;
    mismatch.dilations = {1, 2};
    CHECK_THROWS_AS(net::validate(mismatch), Error);
    CHECK_NOTHROW(net::validate(net::NetworkConfig{}));
}
