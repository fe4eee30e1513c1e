#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phmoea/series.hpp"

namespace phmoea {

enum class ResampleOp { linear, decimate_repeat, hybrid, pool, conv_blurpool, fir_lowpass };
enum class PoolType { avg, max, median, weighted };

std::string_view name(ResampleOp op);
std::string_view name(PoolType p);
std::optional<ResampleOp> parse_resample_op(std::string_view s);
std::optional<PoolType> parse_pool_type(std::string_view s);
std::span<const std::string_view> resample_op_names();
std::span<const std::string_view> pool_type_names();

// Maps a T x F series onto L_p rows. pool_type is required exactly when op is pool.
Series align(const Series& x, std::size_t aligned_length, ResampleOp op, std::optional<PoolType> pool_type = {});

// Building blocks, exposed for testing.
std::size_t nearest_index(double u, std::size_t T);
std::vector<double> fir_lowpass_kernel(std::size_t T, std::size_t aligned_length);
std::vector<double> convolve_reflect(std::span<const double> x, std::span<const double> kernel);

} // namespace phmoea
