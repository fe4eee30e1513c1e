#include "phmoea/bench.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace phmoea {

std::string_view name(BenchVariant v) { return v == BenchVariant::hdtlz2 ? "hdtlz2" : "hdtlz7"; }
std::string_view name(Topology t) { return t == Topology::chain ? "chain" : "tree"; }

std::optional<BenchVariant> parse_bench_variant(std::string_view s)
{
    if (s == "hdtlz2") {
        return BenchVariant::hdtlz2;
    }
    if (s == "hdtlz7") {
        return BenchVariant::hdtlz7;
    }
    return std::nullopt;
}

std::optional<Topology> parse_topology(std::string_view s)
{
    if (s == "chain") {
        return Topology::chain;
    }
    if (s == "tree") {
        return Topology::tree;
    }
    return std::nullopt;
}

void HBenchProblem::validate() const
{
    if (n < 3) {
        throw std::invalid_argument(fmt::format("benchmark dimension must be at least 3 (got {})", n));
    }
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("coupling coefficient must be non-negative");
    }
}

ConfigSpace bench_space(const HBenchProblem& problem)
{
    problem.validate();
    std::vector<VariableSpec> vars;
    auto real = [](std::size_t j) {
        VariableSpec v;
        v.name = fmt::format("z{}", j);
        v.label = v.name;
        v.continuous = true;
        v.lower = 0.0;
        v.upper = 1.0;
        return v;
    };
    vars.push_back(real(1));
    vars.push_back(real(2));
    for (std::size_t j = 3; j <= problem.n; ++j) {
        VariableSpec gate;
        gate.name = fmt::format("gate{}", j);
        gate.label = gate.name;
        gate.candidates = {"off", "on"};
        vars.push_back(gate);
        auto z = real(j);
        z.parent = ParentCondition{vars.size() - 1, {1}};
        vars.push_back(std::move(z));
    }
    return ConfigSpace(std::move(vars));
}

Projection project(const DecodedConfig& d, const ConfigSpace& space, const HBenchProblem& problem)
{
    Projection p;
    p.z.assign(problem.n, problem.neutral());
    for (std::size_t j = 1; j <= problem.n; ++j) {
        const auto dim = space.index_of(fmt::format("z{}", j));
        if (d.active(dim)) {
            p.z[j - 1] = d.values[dim]->real;
            if (j >= 3) {
                p.active_tail.push_back(j);
            }
        }
    }
    return p;
}

std::size_t parent_index(std::size_t j, Topology topology)
{
    if (j < 3) {
        throw std::invalid_argument("only tail indices (>= 3) have parents");
    }
    return topology == Topology::chain ? j - 1 : (j - 3) / 2 + 2;
}

double coupling(std::span<const double> z, std::span<const std::size_t> active_tail, Topology topology, double gamma)
{
    if (active_tail.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (auto j : active_tail) {
        const double diff = z[j - 1] - z[parent_index(j, topology) - 1];
        sum += diff * diff;
    }
    return gamma * sum / static_cast<double>(active_tail.size());
}

Point hdtlz2(std::span<const double> z, double g_cpl)
{
    const auto n = z.size();
    double g = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        g += (z[j] - 0.5) * (z[j] - 0.5);
    }
    g = g / static_cast<double>(n - 1) + g_cpl;
    const double angle = 0.5 * std::numbers::pi * z[0];
    return {(1.0 + g) * std::cos(angle), (1.0 + g) * std::sin(angle)};
}

Point hdtlz7(std::span<const double> z, double g_cpl)
{
    const auto n = z.size();
    double sum = 0.0;
    for (std::size_t j = 1; j < n; ++j) {
        sum += z[j];
    }
    const double g = 1.0 + 9.0 * sum / static_cast<double>(n - 1) + g_cpl;
    const double f1 = z[0];
    const double h = 2.0 - (f1 / g) * (1.0 + std::sin(3.0 * std::numbers::pi * f1));
    return {f1, 0.5 * g * h};
}

Point evaluate(const HBenchProblem& problem, const Projection& p)
{
    const double g_cpl = coupling(p.z, p.active_tail, problem.topology, problem.gamma);
    return problem.variant == BenchVariant::hdtlz2 ? hdtlz2(p.z, g_cpl) : hdtlz7(p.z, g_cpl);
}

PointSet reference_front(BenchVariant variant, std::size_t n_points)
{
    if (n_points < 2) {
        throw std::invalid_argument("reference front needs at least two points");
    }
    PointSet pts;
    pts.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        const double u = static_cast<double>(i) / static_cast<double>(n_points - 1);
        if (variant == BenchVariant::hdtlz2) {
            const double angle = 0.5 * std::numbers::pi * u;
            pts.push_back({std::cos(angle), std::sin(angle)});
        } else {
            pts.push_back({u, 0.5 * (2.0 - u * (1.0 + std::sin(3.0 * std::numbers::pi * u)))});
        }
    }
    if (variant == BenchVariant::hdtlz2) {
        // cos(pi/2) is not exactly zero in floating point.
        pts.front() = {1.0, 0.0};
        pts.back() = {0.0, 1.0};
        return pts;
    }
    return nondominated(pts);
}

} // namespace phmoea
