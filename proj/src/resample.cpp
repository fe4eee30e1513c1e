#include "phmoea/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace phmoea {

namespace {

constexpr std::array<std::string_view, 6> kOpNames{"linear", "decimate_repeat", "hybrid",
                                                   "pool",   "conv_blurpool",   "fir_lowpass"};
constexpr std::array<std::string_view, 4> kPoolNames{"avg", "max", "median", "weighted"};

constexpr std::size_t kUpsampleSmoothing = 3;
constexpr std::size_t kMaxFirLength = 63;

using Column = std::vector<double>;

double coordinate(std::size_t t, std::size_t T, std::size_t L)
{
    return static_cast<double>(t) * static_cast<double>(T - 1) / static_cast<double>(L - 1);
}

Column repeat(const Column& x, std::size_t L)
{
    const std::size_t T = x.size();
    const std::size_t q = L / T;
    const std::size_t s = L - q * T;
    Column out;
    out.reserve(L);
    for (std::size_t i = 0; i < T; ++i) {
        const std::size_t n = i < s ? q + 1 : q;
        out.insert(out.end(), n, x[i]);
    }
    return out;
}

Column linear(const Column& x, std::size_t L)
{
    const std::size_t T = x.size();
    if (T == 1) {
        return repeat(x, L);
    }
    Column out(L);
    for (std::size_t t = 0; t < L; ++t) {
        const double u = coordinate(t, T, L);
        const auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= T - 1) {
            out[t] = x[T - 1];
        } else {
            const double lambda = u - static_cast<double>(i);
            out[t] = (1.0 - lambda) * x[i] + lambda * x[i + 1];
        }
    }
    return out;
}

Column decimate(const Column& x, std::size_t L)
{
    const std::size_t T = x.size();
    Column out(L);
    for (std::size_t t = 0; t < L; ++t) {
        out[t] = x[nearest_index(coordinate(t, T, L), T)];
    }
    return out;
}

double median_of(Column values)
{
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Column pool_down(const Column& x, std::size_t L, PoolType type)
{
    const std::size_t T = x.size();
    Column out(L);
    for (std::size_t t = 0; t < L; ++t) {
        const std::size_t begin = t * T / L;
        const std::size_t end = (t + 1) * T / L;
        const std::size_t n = end - begin;
        switch (type) {
        case PoolType::avg: {
            double sum = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                sum += x[k];
            }
            out[t] = sum / static_cast<double>(n);
            break;
        }
        case PoolType::max:
            out[t] = *std::max_element(x.begin() + begin, x.begin() + end);
            break;
        case PoolType::median:
            out[t] = median_of(Column(x.begin() + begin, x.begin() + end));
            break;
        case PoolType::weighted: {
            if (n == 1) {
                out[t] = x[begin];
                break;
            }
            double num = 0.0;
            double den = 0.0;
            for (std::size_t k = begin; k < end; ++k) {
                const double r = 2.0 * static_cast<double>(k - begin) / static_cast<double>(n - 1) - 1.0;
                const double alpha = 1.0 - std::abs(r);
                num += alpha * x[k];
                den += alpha;
            }
            if (den > 0.0) {
                out[t] = num / den;
            } else {
                // Two-sample intervals give zero triangular weight to both ends.
                double sum = 0.0;
                for (std::size_t k = begin; k < end; ++k) {
                    sum += x[k];
                }
                out[t] = sum / static_cast<double>(n);
            }
            break;
        }
        }
    }
    return out;
}

const std::array<double, 5> kBlur{1.0 / 16, 4.0 / 16, 6.0 / 16, 4.0 / 16, 1.0 / 16};

Column align_column(const Column& x, std::size_t L, ResampleOp op, std::optional<PoolType> pool)
{
    const std::size_t T = x.size();
    if (T == 1) {
        return repeat(x, L);
    }
    const bool down = T > L;
    switch (op) {
    case ResampleOp::linear:
        return linear(x, L);
    case ResampleOp::decimate_repeat:
        return down ? decimate(x, L) : repeat(x, L);
    case ResampleOp::hybrid: {
        if (!down) {
            return linear(x, L);
        }
        const Column z = decimate(x, L);
        Column out = z;
        for (std::size_t t = 1; t + 1 < L; ++t) {
            out[t] = (z[t - 1] + z[t] + z[t + 1]) / 3.0;
        }
        return out;
    }
    case ResampleOp::pool:
        return down ? pool_down(x, L, *pool) : repeat(x, L);
    case ResampleOp::conv_blurpool:
        if (down) {
            return decimate(convolve_reflect(x, kBlur), L);
        }
        return convolve_reflect(linear(x, L), kBlur);
    case ResampleOp::fir_lowpass: {
        if (down) {
            return decimate(convolve_reflect(x, fir_lowpass_kernel(T, L)), L);
        }
        const Column mean(kUpsampleSmoothing, 1.0 / static_cast<double>(kUpsampleSmoothing));
        return convolve_reflect(linear(x, L), mean);
    }
    }
    throw std::logic_error("unhandled resampling operator");
}

std::size_t reflect(std::ptrdiff_t i, std::size_t n)
{
    if (n == 1) {
        return 0;
    }
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    std::ptrdiff_t m = i % period;
    if (m < 0) {
        m += period;
    }
    if (m >= static_cast<std::ptrdiff_t>(n)) {
        m = period - m;
    }
    return static_cast<std::size_t>(m);
}

} // namespace

std::string_view name(ResampleOp op) { return kOpNames[static_cast<std::size_t>(op)]; }
std::string_view name(PoolType p) { return kPoolNames[static_cast<std::size_t>(p)]; }
std::span<const std::string_view> resample_op_names() { return kOpNames; }
std::span<const std::string_view> pool_type_names() { return kPoolNames; }

std::optional<ResampleOp> parse_resample_op(std::string_view s)
{
    for (std::size_t i = 0; i < kOpNames.size(); ++i) {
        if (kOpNames[i] == s) {
            return static_cast<ResampleOp>(i);
        }
    }
    return std::nullopt;
}

std::optional<PoolType> parse_pool_type(std::string_view s)
{
    for (std::size_t i = 0; i < kPoolNames.size(); ++i) {
        if (kPoolNames[i] == s) {
            return static_cast<PoolType>(i);
        }
    }
    return std::nullopt;
}

std::size_t nearest_index(double u, std::size_t T)
{
    const double r = std::floor(u + 0.5);
    if (r <= 0.0) {
        return 0;
    }
    return std::min(T - 1, static_cast<std::size_t>(r));
}

std::vector<double> fir_lowpass_kernel(std::size_t T, std::size_t L)
{
    const double cutoff = 0.5 * static_cast<double>(L) / static_cast<double>(T);
    std::size_t length = 2 * static_cast<std::size_t>(std::ceil(2.0 / cutoff)) + 1;
    const std::size_t cap = std::min(T, kMaxFirLength);
    if (length > cap) {
        length = cap % 2 == 1 ? cap : cap - 1;
    }
    if (length <= 1) {
        return {1.0};
    }
    const double mid = static_cast<double>(length - 1) / 2.0;
    std::vector<double> h(length);
    double sum = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
        const double x = 2.0 * cutoff * (static_cast<double>(n) - mid);
        const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        const double window =
            0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(length - 1));
        h[n] = 2.0 * cutoff * sinc * window;
        sum += h[n];
    }
    for (auto& v : h) {
        v /= sum;
    }
    return h;
}

std::vector<double> convolve_reflect(std::span<const double> x, std::span<const double> kernel)
{
    const auto n = x.size();
    const auto half = static_cast<std::ptrdiff_t>(kernel.size() / 2);
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kernel.size(); ++k) {
            const auto idx = static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) - half;
            acc += kernel[k] * x[reflect(idx, n)];
        }
        out[i] = acc;
    }
    return out;
}

Series align(const Series& x, std::size_t L, ResampleOp op, std::optional<PoolType> pool_type)
{
    if (L < 2) {
        throw std::invalid_argument(fmt::format("aligned length must be at least 2 (got {})", L));
    }
    if (op == ResampleOp::pool && !pool_type) {
        throw std::invalid_argument("resampling operator 'pool' requires a pooling type");
    }
    if (x.rows() == 0 || x.cols() == 0) {
        throw std::invalid_argument("series must have at least one row and one column");
    }
    Series out(L, x.cols());
    for (std::size_t f = 0; f < x.cols(); ++f) {
        out.set_col(f, align_column(x.col(f), L, op, pool_type));
    }
    return out;
}

} // namespace phmoea
