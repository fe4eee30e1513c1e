#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "phmoea/series.hpp"

namespace phmoea {

struct Point {
    double f1 = 0.0;
    double f2 = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
    friend auto operator<=>(const Point&, const Point&) = default;
};

using PointSet = std::vector<Point>;

// Pareto dominance under minimization.
inline bool dominates(const Point& a, const Point& b)
{
    return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

// Duplicate-free non-dominated subset, sorted by f1 ascending.
PointSet nondominated(std::span<const Point> points);

double igd(std::span<const Point> approx, std::span<const Point> reference);

// Area dominated by points and bounded by ref. Points that do not dominate
// ref contribute nothing.
double hv(std::span<const Point> points, const Point& ref);

PointSet merged_reference_front(std::span<const PointSet> sets);

struct ForecastReport {
    std::vector<double> mse;
    std::vector<double> mae;
    std::vector<double> mape;
    double nmse = 0.0;
    double nmae = 0.0;
    double mape_mean = 0.0;
};

constexpr double kMetricEpsilon = 1e-8;

// truth and predicted are N x K (rows are samples, columns targets).
ForecastReport forecast_metrics(const Series& truth, const Series& predicted, std::span<const double> sigma,
                                double eps = kMetricEpsilon);

enum class LossKind {
    mse,
    mae,
    smooth_l1,
    mape,
    huber,
    logcosh,
    quantile,
    smape,
    combined,
    adaptive_combined,
    multi_quantile,
};

std::optional<LossKind> parse_loss(std::string_view s);
std::string_view name(LossKind kind);

struct LossParams {
    double beta = 1.0;  // SmoothL1 transition
    double delta = 1.0; // Huber threshold
    double tau = 0.5;   // Quantile level
    double eps = kMetricEpsilon;
    std::optional<std::pair<LossKind, LossKind>> pair;
    std::pair<double, double> weights{0.5, 0.5};
};

// Mean over all N * K entries of the per-kind elementwise loss.
double loss(LossKind kind, const Series& truth, const Series& predicted, const LossParams& params = {});

} // namespace phmoea
