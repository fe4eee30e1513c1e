#include "phmoea/series.hpp"

#include <stdexcept>

namespace phmoea {

Series::Series(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Series::Series(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("series data does not match its shape");
    }
}

Series Series::column(std::vector<double> values)
{
    const auto n = values.size();
    return Series(n, 1, std::move(values));
}

std::vector<double> Series::col(std::size_t f) const
{
    std::vector<double> out(rows_);
    for (std::size_t t = 0; t < rows_; ++t) {
        out[t] = (*this)(t, f);
    }
    return out;
}

void Series::set_col(std::size_t f, std::span<const double> values)
{
    for (std::size_t t = 0; t < rows_; ++t) {
        (*this)(t, f) = values[t];
    }
}

} // namespace phmoea
