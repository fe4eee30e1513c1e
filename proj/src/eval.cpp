#include "phmoea/eval.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "phmoea/netspec.hpp"

namespace phmoea {

Evaluation Evaluator::operator()(const DecodedConfig& d, std::uint64_t key)
{
    ++calls_;
    const auto start = std::chrono::steady_clock::now();
    Evaluation e;
    try {
        e = evaluate(d);
    } catch (const std::exception& ex) {
        e = Evaluation{};
        e.status = EvalStatus::error;
        e.message = ex.what();
    }
    if (e.ok() && !(std::isfinite(e.f1) && std::isfinite(e.f2))) {
        e.status = EvalStatus::error;
        e.message = "non-finite objective";
    }
    e.key = key;
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return e;
}

BenchmarkEvaluator::BenchmarkEvaluator(HBenchProblem problem) : problem_(problem), space_(bench_space(problem)) {}

Evaluation BenchmarkEvaluator::evaluate(const DecodedConfig& d) { return eval_benchmark(d, space_, problem_); }

Evaluation eval_benchmark(const DecodedConfig& d, const ConfigSpace& space, const HBenchProblem& problem)
{
    const auto f = evaluate(problem, project(d, space, problem));
    Evaluation e;
    e.f1 = f.f1;
    e.f2 = f.f2;
    return e;
}

namespace {

constexpr double kBaseError = 0.05;
constexpr double kOrdinalScale = 0.25;
constexpr double kActivityMismatch = 0.05;
constexpr double kCapacityScale = 0.15;

bool is_ordinal(const VariableSpec& v)
{
    if (v.continuous) {
        return true;
    }
    return std::none_of(v.candidates.begin(), v.candidates.end(), [](const Json& c) {
        if (c.is_string()) {
            return true;
        }
        if (c.is_array()) {
            return std::any_of(c.begin(), c.end(), [](const Json& x) { return x.is_string(); });
        }
        return false;
    });
}

double unit_position(const VariableSpec& v, const ActiveValue& value)
{
    if (v.continuous) {
        return to_unit(value.real, v.lower, v.upper, v.scale);
    }
    const auto n = v.candidates.size();
    return n > 1 ? static_cast<double>(value.choice) / static_cast<double>(n - 1) : 0.0;
}

} // namespace

SurrogateEvaluator::SurrogateEvaluator(ConfigSpace space, SurrogateOptions options)
    : space_(std::move(space)), options_(options), grid_(space_)
{
    Rng rng(options_.seed);
    target_ = sample_random(space_, grid_, rng);
    target_config_ = decode(target_, space_, grid_);
    const auto dims = space_.size();
    weights_.resize(dims);
    offsets_.resize(dims);
    ordinal_.resize(dims);
    for (std::size_t j = 0; j < dims; ++j) {
        const auto& v = space_[j];
        ordinal_[j] = is_ordinal(v);
        weights_[j] = rng.uniform(0.5, 1.5);
        if (!ordinal_[j]) {
            offsets_[j].resize(v.candidates.size());
            for (std::size_t c = 0; c < v.candidates.size(); ++c) {
                offsets_[j][c] = c == target_.genes[j] ? 0.0 : rng.uniform(0.02, 0.1);
            }
        }
    }
    target_log_params_ = std::log(static_cast<double>(params(target_config_)));
}

std::uint64_t SurrogateEvaluator::params(const DecodedConfig& d) const
{
    return count_params(build_graph(d, space_, options_.input_channels, options_.targets));
}

double SurrogateEvaluator::error(const DecodedConfig& d) const
{
    if (options_.stagnant) {
        return 1.0;
    }
    double f = kBaseError;
    for (std::size_t j = 0; j < space_.size(); ++j) {
        const bool here = d.active(j);
        const bool there = target_config_.active(j);
        if (!here && !there) {
            continue;
        }
        if (here != there) {
            f += kActivityMismatch * weights_[j];
            continue;
        }
        if (ordinal_[j]) {
            const double u = unit_position(space_[j], *d.values[j]);
            const double ut = unit_position(space_[j], *target_config_.values[j]);
            f += kOrdinalScale * weights_[j] * (u - ut) * (u - ut);
        } else {
            f += offsets_[j][d.values[j]->choice];
        }
    }
    const double shortfall = target_log_params_ - std::log(static_cast<double>(params(d)));
    f += kCapacityScale * std::max(0.0, shortfall);
    return f;
}

Evaluation SurrogateEvaluator::evaluate(const DecodedConfig& d)
{
    Evaluation e;
    e.f2 = static_cast<double>(params(d));
    e.f1 = error(d);
    return e;
}

Evaluation eval_surrogate(const DecodedConfig& d, const ConfigSpace& space, std::size_t targets,
                          std::size_t input_channels)
{
    SurrogateEvaluator surrogate(space, SurrogateOptions{targets, input_channels});
    return surrogate(d, canonical_key(d));
}

} // namespace phmoea
