#include "numeric/array.hpp"

#include "util/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mepo::nc {

std::size_t shape_size(const Shape& shape)
{
    std::size_t n = 1;
    for (auto d : shape) {
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            s += "x";
        }
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

static void check_shape(const Shape& shape)
{
    require(!shape.empty(), "array shape must have at least one dimension");
    for (auto d : shape) {
        require(d >= 1, "array dimensions must be >= 1, got " + shape_str(shape));
    }
}

Array::Array()
    : shape_{1}
    , data_(1, 0.0)
{
}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape))
{
    check_shape(shape_);
    data_.assign(shape_size(shape_), fill);
}

Array::Array(Shape shape, std::vector<double> data)
    : shape_(std::move(shape))
    , data_(std::move(data))
{
    check_shape(shape_);
    require(data_.size() == shape_size(shape_),
            "data length " + std::to_string(data_.size()) + " does not match shape " + shape_str(shape_));
}

Array Array::from(std::initializer_list<double> values)
{
    return Array(Shape{values.size()}, std::vector<double>(values));
}

Array Array::from2d(std::initializer_list<std::initializer_list<double>> rows)
{
    std::vector<double> data;
    std::size_t cols = rows.size() ? rows.begin()->size() : 0;
    for (const auto& r : rows) {
        require(r.size() == cols, "ragged rows in from2d");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Array(Shape{rows.size(), cols}, std::move(data));
}

double Array::item() const
{
    require(data_.size() == 1, "item() on non-scalar array " + shape_str(shape_));
    return data_[0];
}

Array Array::reshaped(Shape shape) const
{
    require(shape_size(shape) == data_.size(),
            "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    return Array(std::move(shape), data_);
}

void Array::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Array::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Array softmax_rows(const Array& m)
{
    require(m.rank() == 2, "softmax_rows expects a rank-2 array, got " + shape_str(m.shape()));
    if (!m.all_finite()) {
        fail(ErrorKind::NumericDomain, "softmax_rows: non-finite input");
    }
    const auto rows = m.dim(0);
    const auto cols = m.dim(1);
    Array out(m.shape());
    for (std::size_t i = 0; i < rows; ++i) {
        double mx = m.at(i, 0);
        for (std::size_t j = 1; j < cols; ++j) {
            mx = std::max(mx, m.at(i, j));
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            out.at(i, j) = std::exp(m.at(i, j) - mx);
            sum += out.at(i, j);
        }
        for (std::size_t j = 0; j < cols; ++j) {
            out.at(i, j) /= sum;
        }
    }
    return out;
}

} // namespace mepo::nc
