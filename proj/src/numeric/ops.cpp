#include "numeric/ops.hpp"

#include "util/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>

namespace mepo::nc {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<RowMat> view(Array& a, std::size_t rows, std::size_t cols, std::size_t offset = 0)
{
    return {a.data().data() + offset, Eigen::Index(rows), Eigen::Index(cols)};
}

Eigen::Map<const RowMat> cview(const Array& a, std::size_t rows, std::size_t cols, std::size_t offset = 0)
{
    return {a.data().data() + offset, Eigen::Index(rows), Eigen::Index(cols)};
}

struct AxisView
{
    std::size_t outer = 1;
    std::size_t mid = 1;
    std::size_t inner = 1;
};

AxisView axis_view(const Shape& s, std::size_t axis)
{
    require(axis < s.size(), "axis " + std::to_string(axis) + " out of range for " + shape_str(s));
    AxisView v;
    for (std::size_t i = 0; i < axis; ++i) {
        v.outer *= s[i];
    }
    v.mid = s[axis];
    for (std::size_t i = axis + 1; i < s.size(); ++i) {
        v.inner *= s[i];
    }
    return v;
}

Shape drop_axis(const Shape& s, std::size_t axis)
{
    Shape out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i != axis) {
            out.push_back(s[i]);
        }
    }
    if (out.empty()) {
        out.push_back(1);
    }
    return out;
}

void same_shape(Var a, Var b, const char* op)
{
    require(a.shape() == b.shape(),
            std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Elementwise unary op given f(x) and f'(x, y) where y = f(x).
template <class F, class D>
Var unary(Var a, F f, D df)
{
    const auto& x = a.value();
    Array y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = f(x[i]);
    }
    const auto ia = a.id();
    return a.tape().record(std::move(y), {a}, [ia, df](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& x = t.value(ia);
        const auto& y = t.value(self);
        auto& gx = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
            gx[i] += g[i] * df(x[i], y[i]);
        }
    });
}

double sigmoid_scalar(double x)
{
    if (x >= 0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

bool is_suffix(const Shape& full, const Shape& suffix)
{
    if (suffix.size() > full.size()) {
        return false;
    }
    return std::equal(suffix.begin(), suffix.end(), full.end() - static_cast<std::ptrdiff_t>(suffix.size()));
}

} // namespace

Var add(Var a, Var b)
{
    same_shape(a, b, "add");
    Array y = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += bv[i];
    }
    const auto ia = a.id(), ib = b.id();
    return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        for (auto id : {ia, ib}) {
            if (!t.needs_grad(id)) {
                continue;
            }
            auto& gx = t.grad(id);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gx[i] += g[i];
            }
        }
    });
}

Var sub(Var a, Var b)
{
    same_shape(a, b, "sub");
    Array y = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] -= bv[i];
    }
    const auto ia = a.id(), ib = b.id();
    return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        if (t.needs_grad(ia)) {
            auto& ga = t.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
            }
        }
        if (t.needs_grad(ib)) {
            auto& gb = t.grad(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] -= g[i];
            }
        }
    });
}

Var mul(Var a, Var b)
{
    same_shape(a, b, "mul");
    Array y = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] *= bv[i];
    }
    const auto ia = a.id(), ib = b.id();
    return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& av = t.value(ia);
        const auto& bv = t.value(ib);
        if (t.needs_grad(ia)) {
            auto& ga = t.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * bv[i];
            }
        }
        if (t.needs_grad(ib)) {
            auto& gb = t.grad(ib);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gb[i] += g[i] * av[i];
            }
        }
    });
}

Var minimum(Var a, Var b)
{
    same_shape(a, b, "minimum");
    Array y = a.value();
    const auto& bv = b.value();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = std::min(y[i], bv[i]);
    }
    const auto ia = a.id(), ib = b.id();
    return a.tape().record(std::move(y), {a, b}, [ia, ib](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& av = t.value(ia);
        const auto& bv = t.value(ib);
        // ties route to a
        for (std::size_t i = 0; i < g.size(); ++i) {
            const bool to_a = av[i] <= bv[i];
            if (to_a && t.needs_grad(ia)) {
                t.grad(ia)[i] += g[i];
            }
            else if (!to_a && t.needs_grad(ib)) {
                t.grad(ib)[i] += g[i];
            }
        }
    });
}

Var scale(Var a, double c)
{
    return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Var a, double c)
{
    return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var one_minus(Var a)
{
    return unary(a, [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Var tanh(Var a)
{
    return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a)
{
    return unary(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var softplus(Var a)
{
    return unary(
        a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
        [](double x, double) { return sigmoid_scalar(x); });
}

Var relu(Var a)
{
    return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var abs(Var a)
{
    return unary(
        a, [](double x) { return std::abs(x); },
        [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var add_suffix(Var a, Var v)
{
    require(is_suffix(a.shape(), v.shape()),
            "add_suffix: " + shape_str(v.shape()) + " is not a suffix of " + shape_str(a.shape()));
    Array y = a.value();
    const auto& vv = v.value();
    const auto n = vv.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] += vv[i % n];
    }
    const auto ia = a.id(), iv = v.id();
    return a.tape().record(std::move(y), {a, v}, [ia, iv, n](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        if (t.needs_grad(ia)) {
            auto& ga = t.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
            }
        }
        if (t.needs_grad(iv)) {
            auto& gv = t.grad(iv);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gv[i % n] += g[i];
            }
        }
    });
}

Var mul_suffix(Var a, Var v)
{
    require(is_suffix(a.shape(), v.shape()),
            "mul_suffix: " + shape_str(v.shape()) + " is not a suffix of " + shape_str(a.shape()));
    Array y = a.value();
    const auto& vv = v.value();
    const auto n = vv.size();
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] *= vv[i % n];
    }
    const auto ia = a.id(), iv = v.id();
    return a.tape().record(std::move(y), {a, v}, [ia, iv, n](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& av = t.value(ia);
        const auto& vv = t.value(iv);
        if (t.needs_grad(ia)) {
            auto& ga = t.grad(ia);
            for (std::size_t i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * vv[i % n];
            }
        }
        if (t.needs_grad(iv)) {
            auto& gv = t.grad(iv);
            for (std::size_t i = 0; i < g.size(); ++i) {
                gv[i % n] += g[i] * av[i];
            }
        }
    });
}

Var matmul_last(Var x, Var w)
{
    require(w.rank() == 2, "matmul_last: weight must be rank-2");
    const auto cin = w.dim(0);
    const auto cout = w.dim(1);
    require(x.shape().back() == cin,
            "matmul_last: " + shape_str(x.shape()) + " incompatible with " + shape_str(w.shape()));
    const auto rows = x.value().size() / cin;
    Shape oshape = x.shape();
    oshape.back() = cout;
    Array y(oshape);
    view(y, rows, cout).noalias() = cview(x.value(), rows, cin) * cview(w.value(), cin, cout);
    const auto ix = x.id(), iw = w.id();
    return x.tape().record(std::move(y), {x, w}, [ix, iw, rows, cin, cout](Tape& t, std::size_t self) {
        const auto g = cview(t.grad(self), rows, cout);
        if (t.needs_grad(ix)) {
            view(t.grad(ix), rows, cin).noalias() += g * cview(t.value(iw), cin, cout).transpose();
        }
        if (t.needs_grad(iw)) {
            view(t.grad(iw), cin, cout).noalias() += cview(t.value(ix), rows, cin).transpose() * g;
        }
    });
}

Var conv_time(Var x, Var w, std::size_t dilation)
{
    require(x.rank() >= 2, "conv_time: input must have time and channel axes");
    require(w.rank() == 3, "conv_time: kernel must be [K, C, D]");
    require(dilation >= 1, "conv_time: dilation must be >= 1");
    const auto& xs = x.shape();
    const auto tin = xs[xs.size() - 2];
    const auto cin = xs.back();
    const auto kw = w.dim(0);
    const auto cout = w.dim(2);
    require(w.dim(1) == cin, "conv_time: kernel channels " + shape_str(w.shape()) + " vs input " + shape_str(xs));
    const auto span = (kw - 1) * dilation;
    require(tin > span, "conv_time: time length " + std::to_string(tin) + " too short for receptive span " +
                            std::to_string(span + 1));
    const auto tout = tin - span;
    const auto rows = x.value().size() / (tin * cin);
    const auto cols = kw * cin;
    // unrolled input: row (r, t) holds x[r, t + k * dilation, :] for k = 0..K-1
    auto unrolled = std::make_shared<Array>(Shape{rows * tout, cols});
    {
        const auto xv = x.value().data();
        auto uv = unrolled->data();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t tt = 0; tt < tout; ++tt) {
                double* dst = &uv[(r * tout + tt) * cols];
                for (std::size_t k = 0; k < kw; ++k) {
                    std::copy_n(&xv[(r * tin + tt + k * dilation) * cin], cin, dst + k * cin);
                }
            }
        }
    }
    Shape oshape = xs;
    oshape[oshape.size() - 2] = tout;
    oshape.back() = cout;
    Array y(oshape);
    view(y, rows * tout, cout).noalias() = cview(*unrolled, rows * tout, cols) * cview(w.value(), cols, cout);
    const auto ix = x.id(), iw = w.id();
    return x.tape().record(
        std::move(y), {x, w},
        [ix, iw, rows, tin, tout, cin, cout, kw, cols, dilation, unrolled](Tape& t, std::size_t self) {
            const auto g = cview(t.grad(self), rows * tout, cout);
            if (t.needs_grad(iw)) {
                view(t.grad(iw), cols, cout).noalias() += cview(*unrolled, rows * tout, cols).transpose() * g;
            }
            if (t.needs_grad(ix)) {
                Array gu(Shape{rows * tout, cols});
                view(gu, rows * tout, cols).noalias() = g * cview(t.value(iw), cols, cout).transpose();
                auto gx = t.grad(ix).data();
                const auto guv = gu.data();
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t tt = 0; tt < tout; ++tt) {
                        const double* src = &guv[(r * tout + tt) * cols];
                        for (std::size_t k = 0; k < kw; ++k) {
                            double* dst = &gx[(r * tin + tt + k * dilation) * cin];
                            for (std::size_t c = 0; c < cin; ++c) {
                                dst[c] += src[k * cin + c];
                            }
                        }
                    }
                }
            }
        });
}

Var node_mix(Var p, Var x)
{
    require(x.rank() >= 2, "node_mix: x must be [B, N, ...]");
    const auto batch = x.dim(0);
    const auto n = x.dim(1);
    const bool batched = p.rank() == 3;
    require((p.rank() == 2 && p.dim(0) == n && p.dim(1) == n) ||
                (batched && p.dim(0) == batch && p.dim(1) == n && p.dim(2) == n),
            "node_mix: mixing matrix " + shape_str(p.shape()) + " incompatible with " + shape_str(x.shape()));
    const auto inner = x.value().size() / (batch * n);
    Array y(x.shape());
    for (std::size_t b = 0; b < batch; ++b) {
        const auto pb = cview(p.value(), n, n, batched ? b * n * n : 0);
        view(y, n, inner, b * n * inner).noalias() = pb * cview(x.value(), n, inner, b * n * inner);
    }
    const auto ip = p.id(), ix = x.id();
    return x.tape().record(std::move(y), {p, x}, [ip, ix, batch, n, inner, batched](Tape& t, std::size_t self) {
        for (std::size_t b = 0; b < batch; ++b) {
            const auto g = cview(t.grad(self), n, inner, b * n * inner);
            if (t.needs_grad(ix)) {
                view(t.grad(ix), n, inner, b * n * inner).noalias() +=
                    cview(t.value(ip), n, n, batched ? b * n * n : 0).transpose() * g;
            }
            if (t.needs_grad(ip)) {
                view(t.grad(ip), n, n, batched ? b * n * n : 0).noalias() +=
                    g * cview(t.value(ix), n, inner, b * n * inner).transpose();
            }
        }
    });
}

Var mix_axis(Var w, Var x, std::size_t axis)
{
    require(w.rank() == 2, "mix_axis: weight must be rank-2");
    const auto v = axis_view(x.shape(), axis);
    const auto pdim = w.dim(0);
    const auto qdim = w.dim(1);
    require(v.mid == qdim, "mix_axis: weight " + shape_str(w.shape()) + " incompatible with axis " +
                               std::to_string(axis) + " of " + shape_str(x.shape()));
    Shape oshape = x.shape();
    oshape[axis] = pdim;
    Array y(oshape);
    {
        const auto wv = w.value().data();
        const auto xv = x.value().data();
        auto yv = y.data();
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t p = 0; p < pdim; ++p) {
                double* yr = &yv[(o * pdim + p) * v.inner];
                for (std::size_t q = 0; q < qdim; ++q) {
                    const double wpq = wv[p * qdim + q];
                    const double* xr = &xv[(o * qdim + q) * v.inner];
                    for (std::size_t r = 0; r < v.inner; ++r) {
                        yr[r] += wpq * xr[r];
                    }
                }
            }
        }
    }
    const auto iw = w.id(), ix = x.id();
    return x.tape().record(std::move(y), {w, x}, [iw, ix, v, pdim, qdim](Tape& t, std::size_t self) {
        const auto g = t.grad(self).data();
        const auto wv = t.value(iw).data();
        const auto xv = t.value(ix).data();
        const bool need_x = t.needs_grad(ix);
        const bool need_w = t.needs_grad(iw);
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t p = 0; p < pdim; ++p) {
                const double* gr = &g[(o * pdim + p) * v.inner];
                for (std::size_t q = 0; q < qdim; ++q) {
                    const std::size_t xoff = (o * qdim + q) * v.inner;
                    if (need_x) {
                        auto gx = t.grad(ix).data();
                        const double wpq = wv[p * qdim + q];
                        for (std::size_t r = 0; r < v.inner; ++r) {
                            gx[xoff + r] += wpq * gr[r];
                        }
                    }
                    if (need_w) {
                        double s = 0.0;
                        for (std::size_t r = 0; r < v.inner; ++r) {
                            s += gr[r] * xv[xoff + r];
                        }
                        t.grad(iw)[p * qdim + q] += s;
                    }
                }
            }
        }
    });
}

Var transpose_last2(Var a)
{
    require(a.rank() >= 2, "transpose_last2: rank must be >= 2");
    const auto& s = a.shape();
    const auto rows = s[s.size() - 2];
    const auto cols = s.back();
    const auto outer = a.value().size() / (rows * cols);
    Shape oshape = s;
    std::swap(oshape[oshape.size() - 2], oshape.back());
    Array y(oshape);
    const auto& av = a.value();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                y[o * rows * cols + j * rows + i] = av[o * rows * cols + i * cols + j];
            }
        }
    }
    const auto ia = a.id();
    return a.tape().record(std::move(y), {a}, [ia, outer, rows, cols](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& ga = t.grad(ia);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < rows; ++i) {
                for (std::size_t j = 0; j < cols; ++j) {
                    ga[o * rows * cols + i * cols + j] += g[o * rows * cols + j * rows + i];
                }
            }
        }
    });
}

Var row_normalize(Var a)
{
    const auto cols = a.shape().back();
    const auto rows = a.value().size() / cols;
    const auto& av = a.value();
    Array y(a.shape());
    Array sums(Shape{rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            require(av[r * cols + c] >= 0.0, "row_normalize: negative entry");
            s += av[r * cols + c];
        }
        sums[r] = s;
        for (std::size_t c = 0; c < cols; ++c) {
            y[r * cols + c] = s > 0.0 ? av[r * cols + c] / s : 1.0 / static_cast<double>(cols);
        }
    }
    const auto ia = a.id();
    return a.tape().record(std::move(y), {a}, [ia, rows, cols, sums](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& y = t.value(self);
        auto& ga = t.grad(ia);
        for (std::size_t r = 0; r < rows; ++r) {
            if (sums[r] <= 0.0) {
                continue;
            }
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                dot += g[r * cols + c] * y[r * cols + c];
            }
            for (std::size_t c = 0; c < cols; ++c) {
                ga[r * cols + c] += (g[r * cols + c] - dot) / sums[r];
            }
        }
    });
}

Var softmax_rows(Var a)
{
    Array y = softmax_rows(a.value());
    const auto rows = y.dim(0);
    const auto cols = y.dim(1);
    const auto ia = a.id();
    return a.tape().record(std::move(y), {a}, [ia, rows, cols](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        const auto& y = t.value(self);
        auto& ga = t.grad(ia);
        for (std::size_t r = 0; r < rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
                dot += g.at(r, c) * y.at(r, c);
            }
            for (std::size_t c = 0; c < cols; ++c) {
                ga.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
            }
        }
    });
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end)
{
    const auto v = axis_view(a.shape(), axis);
    require(begin < end && end <= v.mid, "slice: bad range [" + std::to_string(begin) + ", " + std::to_string(end) +
                                             ") for axis of size " + std::to_string(v.mid));
    const auto len = end - begin;
    Shape oshape = a.shape();
    oshape[axis] = len;
    Array y(oshape);
    const auto& av = a.value();
    for (std::size_t o = 0; o < v.outer; ++o) {
        std::copy_n(&av[(o * v.mid + begin) * v.inner], len * v.inner, &y[o * len * v.inner]);
    }
    const auto ia = a.id();
    return a.tape().record(std::move(y), {a}, [ia, v, begin, len](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& ga = t.grad(ia);
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t k = 0; k < len * v.inner; ++k) {
                ga[(o * v.mid + begin) * v.inner + k] += g[o * len * v.inner + k];
            }
        }
    });
}

Var select(Var a, std::size_t axis, std::size_t index)
{
    auto s = slice(a, axis, index, index + 1);
    return reshape(s, drop_axis(a.shape(), axis));
}

Var reshape(Var a, Shape shape)
{
    Array y = a.value().reshaped(std::move(shape));
    const auto ia = a.id();
    return a.tape().record(std::move(y), {a}, [ia](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i];
        }
    });
}

Var concat_last(const std::vector<Var>& parts)
{
    require(!parts.empty(), "concat_last: no inputs");
    Shape lead = parts[0].shape();
    lead.pop_back();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        Shape l = p.shape();
        const auto w = l.back();
        l.pop_back();
        require(l == lead, "concat_last: leading shape mismatch");
        widths.push_back(w);
        total += w;
    }
    const auto rows = parts[0].value().size() / widths[0];
    Shape oshape = lead;
    oshape.push_back(total);
    Array y(oshape);
    std::size_t off = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& pv = parts[k].value();
        for (std::size_t r = 0; r < rows; ++r) {
            std::copy_n(&pv[r * widths[k]], widths[k], &y[r * total + off]);
        }
        off += widths[k];
    }
    std::vector<std::size_t> ids;
    for (const auto& p : parts) {
        ids.push_back(p.id());
    }
    return parts[0].tape().record(std::move(y), parts, [ids, widths, rows, total](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (t.needs_grad(ids[k])) {
                auto& gp = t.grad(ids[k]);
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t c = 0; c < widths[k]; ++c) {
                        gp[r * widths[k] + c] += g[r * total + off + c];
                    }
                }
            }
            off += widths[k];
        }
    });
}

Var stack_last(const std::vector<Var>& parts)
{
    require(!parts.empty(), "stack_last: no inputs");
    std::vector<Var> cols;
    cols.reserve(parts.size());
    for (const auto& p : parts) {
        require(p.shape() == parts[0].shape(), "stack_last: shape mismatch");
        Shape s = p.shape();
        s.push_back(1);
        cols.push_back(reshape(p, s));
    }
    return concat_last(cols);
}

Var mean_axis(Var a, std::size_t axis)
{
    const auto v = axis_view(a.shape(), axis);
    Array y(drop_axis(a.shape(), axis));
    const auto& av = a.value();
    const double inv = 1.0 / static_cast<double>(v.mid);
    for (std::size_t o = 0; o < v.outer; ++o) {
        for (std::size_t m = 0; m < v.mid; ++m) {
            for (std::size_t r = 0; r < v.inner; ++r) {
                y[o * v.inner + r] += av[(o * v.mid + m) * v.inner + r] * inv;
            }
        }
    }
    const auto ia = a.id();
    return a.tape().record(std::move(y), {a}, [ia, v, inv](Tape& t, std::size_t self) {
        const auto& g = t.grad(self);
        auto& ga = t.grad(ia);
        for (std::size_t o = 0; o < v.outer; ++o) {
            for (std::size_t m = 0; m < v.mid; ++m) {
                for (std::size_t r = 0; r < v.inner; ++r) {
                    ga[(o * v.mid + m) * v.inner + r] += g[o * v.inner + r] * inv;
                }
            }
        }
    });
}

Var sum_all(Var a)
{
    double s = 0.0;
    for (double x : a.value().data()) {
        s += x;
    }
    const auto ia = a.id();
    return a.tape().record(Array::scalar(s), {a}, [ia](Tape& t, std::size_t self) {
        const double g = t.grad(self)[0];
        auto& ga = t.grad(ia);
        for (std::size_t i = 0; i < ga.size(); ++i) {
            ga[i] += g;
        }
    });
}

Var mean_all(Var a)
{
    return scale(sum_all(a), 1.0 / static_cast<double>(a.value().size()));
}

} // namespace mepo::nc
