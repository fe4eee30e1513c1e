#include "phmoea/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace phmoea {

PointSet nondominated(std::span<const Point> points)
{
    PointSet sorted(points.begin(), points.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    PointSet front;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : sorted) {
        if (p.f2 < best) {
            front.push_back(p);
            best = p.f2;
        }
    }
    return front;
}

double igd(std::span<const Point> approx, std::span<const Point> reference)
{
    if (approx.empty() || reference.empty()) {
        throw std::invalid_argument("igd: point sets must be non-empty");
    }
    double total = 0.0;
    for (const auto& z : reference) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& a : approx) {
            best = std::min(best, std::hypot(z.f1 - a.f1, z.f2 - a.f2));
        }
        total += best;
    }
    return total / static_cast<double>(reference.size());
}

double hv(std::span<const Point> points, const Point& ref)
{
    PointSet inside;
    for (const auto& p : points) {
        if (p.f1 < ref.f1 && p.f2 < ref.f2) {
            inside.push_back(p);
        }
    }
    const auto front = nondominated(inside);
    double area = 0.0;
    for (std::size_t i = 0; i < front.size(); ++i) {
        const double next = i + 1 < front.size() ? front[i + 1].f1 : ref.f1;
        area += (next - front[i].f1) * (ref.f2 - front[i].f2);
    }
    return area;
}

PointSet merged_reference_front(std::span<const PointSet> sets)
{
    PointSet all;
    for (const auto& s : sets) {
        all.insert(all.end(), s.begin(), s.end());
    }
    return nondominated(all);
}

ForecastReport forecast_metrics(const Series& truth, const Series& predicted, std::span<const double> sigma,
                                double eps)
{
    if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
        throw std::invalid_argument(fmt::format("shape mismatch: {}x{} truths vs {}x{} predictions", truth.rows(),
                                                truth.cols(), predicted.rows(), predicted.cols()));
    }
    if (sigma.size() != truth.cols()) {
        throw std::invalid_argument("one standard deviation per target is required");
    }
    if (truth.rows() == 0 || truth.cols() == 0) {
        throw std::invalid_argument("forecast metrics need at least one sample and one target");
    }
    const auto n = static_cast<double>(truth.rows());
    const auto K = truth.cols();
    ForecastReport r;
    r.mse.assign(K, 0.0);
    r.mae.assign(K, 0.0);
    r.mape.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        if (sigma[k] < 0.0) {
            throw std::invalid_argument("standard deviations must be non-negative");
        }
        for (std::size_t i = 0; i < truth.rows(); ++i) {
            const double y = truth(i, k);
            const double e = y - predicted(i, k);
            r.mse[k] += e * e;
            r.mae[k] += std::abs(e);
            r.mape[k] += std::abs(e / (y + eps));
        }
        r.mse[k] /= n;
        r.mae[k] /= n;
        r.mape[k] *= 100.0 / n;
        r.nmse += r.mse[k] / (sigma[k] * sigma[k] + eps);
        r.nmae += r.mae[k] / (sigma[k] + eps);
        r.mape_mean += r.mape[k];
    }
    r.nmse /= static_cast<double>(K);
    r.nmae /= static_cast<double>(K);
    r.mape_mean /= static_cast<double>(K);
    return r;
}

namespace {

constexpr std::array<std::string_view, 11> kLossNames{
    "MSE", "MAE", "SmoothL1", "MAPE", "Huber", "LogCosh", "Quantile", "SMAPE", "Combined", "AdaptiveCombined",
    "multi_quantile"};

double pinball(double r, double tau) { return std::max(tau * r, (tau - 1.0) * r); }

double elementwise(LossKind kind, double y, double yhat, const LossParams& p)
{
    const double r = y - yhat;
    const double a = std::abs(r);
    switch (kind) {
    case LossKind::mse:
        return r * r;
    case LossKind::mae:
        return a;
    case LossKind::smooth_l1:
        return a < p.beta ? 0.5 * r * r / p.beta : a - 0.5 * p.beta;
    case LossKind::mape:
        return 100.0 * a / (std::abs(y) + p.eps);
    case LossKind::huber:
        return a <= p.delta ? 0.5 * r * r : p.delta * (a - 0.5 * p.delta);
    case LossKind::logcosh:
        // log(cosh r) without overflow for large |r|.
        return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
    case LossKind::quantile:
        return pinball(r, p.tau);
    case LossKind::smape:
        return 100.0 * 2.0 * a / (std::abs(y) + std::abs(yhat) + p.eps);
    case LossKind::multi_quantile:
        return (pinball(r, 0.1) + pinball(r, 0.5) + pinball(r, 0.9)) / 3.0;
    case LossKind::combined:
    case LossKind::adaptive_combined:
        break;
    }
    throw std::logic_error("combined losses have no elementwise form");
}

double mean_loss(LossKind kind, const Series& truth, const Series& predicted, const LossParams& p)
{
    double total = 0.0;
    const auto y = truth.data();
    const auto yhat = predicted.data();
    for (std::size_t i = 0; i < y.size(); ++i) {
        total += elementwise(kind, y[i], yhat[i], p);
    }
    return total / static_cast<double>(y.size());
}

bool is_combination(LossKind k) { return k == LossKind::combined || k == LossKind::adaptive_combined; }

} // namespace

std::optional<LossKind> parse_loss(std::string_view s)
{
    for (std::size_t i = 0; i < kLossNames.size(); ++i) {
        if (kLossNames[i] == s) {
            return static_cast<LossKind>(i);
        }
    }
    return std::nullopt;
}

std::string_view name(LossKind kind) { return kLossNames[static_cast<std::size_t>(kind)]; }

double loss(LossKind kind, const Series& truth, const Series& predicted, const LossParams& params)
{
    if (truth.rows() != predicted.rows() || truth.cols() != predicted.cols()) {
        throw std::invalid_argument("loss: shape mismatch");
    }
    if (truth.data().empty()) {
        throw std::invalid_argument("loss: empty input");
    }
    if (!is_combination(kind)) {
        return mean_loss(kind, truth, predicted, params);
    }
    if (!params.pair) {
        throw std::invalid_argument(fmt::format("{} loss needs a loss pair", name(kind)));
    }
    const auto [first, second] = *params.pair;
    if (is_combination(first) || is_combination(second)) {
        throw std::invalid_argument("combined losses cannot nest");
    }
    const double la = mean_loss(first, truth, predicted, params);
    const double lb = mean_loss(second, truth, predicted, params);
    if (kind == LossKind::combined) {
        return 0.5 * la + 0.5 * lb;
    }
    const auto [w1, w2] = params.weights;
    if (w1 < 0.0 || w2 < 0.0 || std::abs(w1 + w2 - 1.0) > 1e-9) {
        throw std::invalid_argument("adaptive loss weights must be non-negative and sum to one");
    }
    return w1 * la + w2 * lb;
}

} // namespace phmoea
