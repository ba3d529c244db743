#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace mepo::nc {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of doubles. Every dimension is at least 1; a scalar
/// is stored with shape {1}.
class Array
{
public:
    Array();
    explicit Array(Shape shape, double fill = 0.0);
    Array(Shape shape, std::vector<double> data);

    static Array scalar(double v) { return Array(Shape{1}, v); }
    static Array from(std::initializer_list<double> values);
    static Array from2d(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& vec() const noexcept { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    const double& operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const double& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t i, std::size_t j, std::size_t k)
    {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    const double& at(std::size_t i, std::size_t j, std::size_t k) const
    {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    double item() const;
    Array reshaped(Shape shape) const;
    void fill(double v);
    bool all_finite() const;

    bool operator==(const Array& other) const = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Row-wise softmax of a rank-2 array. Throws NumericDomain on non-finite input.
Array softmax_rows(const Array& m);

} // namespace mepo::nc
