#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "phmoea/metrics.hpp"
#include "phmoea/space.hpp"

namespace phmoea {

enum class BenchVariant { hdtlz2, hdtlz7 };
enum class Topology { chain, tree };

std::string_view name(BenchVariant v);
std::string_view name(Topology t);
std::optional<BenchVariant> parse_bench_variant(std::string_view s);
std::optional<Topology> parse_topology(std::string_view s);

// Hierarchical two-objective DTLZ problem. Dimensions 1 and 2 are always
// active; each tail dimension j in 3..n has its own on/off gate.
struct HBenchProblem {
    BenchVariant variant = BenchVariant::hdtlz2;
    std::size_t n = 12;
    Topology topology = Topology::chain;
    double gamma = 1.0;

    double neutral() const { return variant == BenchVariant::hdtlz2 ? 0.5 : 0.0; }
    void validate() const;
};

// Genome layout: z1, z2, then (gate_j, z_j) for j = 3..n with z_j active iff
// gate_j = on.
ConfigSpace bench_space(const HBenchProblem& problem);

struct Projection {
    std::vector<double> z;                 // z[0] holds z_1
    std::vector<std::size_t> active_tail;  // 1-based indices in 3..n
};

Projection project(const DecodedConfig& d, const ConfigSpace& space, const HBenchProblem& problem);

// 1-based parent of tail index j.
std::size_t parent_index(std::size_t j, Topology topology);

double coupling(std::span<const double> z, std::span<const std::size_t> active_tail, Topology topology, double gamma);

Point hdtlz2(std::span<const double> z, double g_cpl);
Point hdtlz7(std::span<const double> z, double g_cpl);

Point evaluate(const HBenchProblem& problem, const Projection& p);

PointSet reference_front(BenchVariant variant, std::size_t n_points);

} // namespace phmoea
