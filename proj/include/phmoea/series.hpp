#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace phmoea {

// Row-major T x F matrix of finite values.
class Series {
public:
    Series() = default;
    Series(std::size_t rows, std::size_t cols, double fill = 0.0);
    Series(std::size_t rows, std::size_t cols, std::vector<double> data);
    static Series column(std::vector<double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t t, std::size_t f) { return data_[t * cols_ + f]; }
    double operator()(std::size_t t, std::size_t f) const { return data_[t * cols_ + f]; }
    std::span<const double> data() const { return data_; }

    std::vector<double> col(std::size_t f) const;
    void set_col(std::size_t f, std::span<const double> values);

    friend bool operator==(const Series&, const Series&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

} // namespace phmoea
