#include <doctest.h>

#include <cmath>
#include <numbers>

#include "phmoea/bench.hpp"

using namespace phmoea;

namespace {

// Genotype with the given gate pattern; every continuous gene uses bin k.
DecodedConfig configured(const ConfigSpace& space, const RefinementState& refine,
                         bool gates_on, std::size_t bin)
{
    Genotype g(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        g.genes[j] = space[j].continuous ? bin : (gates_on ? 1 : 0);
    }
    return decode(repair(g, space, refine), space, refine);
}

std::vector<double> tail_neutral(double z1, double neutral, std::size_t n = 12)
{
    std::vector<double> z(n, neutral);
    z[0] = z1;
    return z;
}

} // namespace

TEST_SUITE("bench") {

TEST_CASE("projection fills inactive tails with the neutral value")
{
    for (auto variant : {BenchVariant::hdtlz2, BenchVariant::hdtlz7}) {
        HBenchProblem prob{.variant = variant};
        const auto space = bench_space(prob);
        const RefinementState refine(space);
        CHECK(space.size() == 2 + 2 * (prob.n - 2));

        const auto off = project(configured(space, refine, false, 1), space, prob);
        CHECK(off.active_tail.empty());
        REQUIRE(off.z.size() == 12);
        CHECK(off.z[0] == doctest::Approx(bin_value(0, 1, 6, 2, Scale::linear)));
        for (std::size_t j = 2; j < 12; ++j) {
            CHECK(off.z[j] == prob.neutral());
        }

        const auto d = configured(space, refine, true, 4);
        const auto on = project(d, space, prob);
        CHECK(on.active_tail.size() == 10);
        for (double z : on.z) {
            CHECK(z == doctest::Approx(bin_value(0, 1, 6, 5, Scale::linear)));
        }
        CHECK(project(d, space, prob).z == on.z);
    }
    CHECK(HBenchProblem{.variant = BenchVariant::hdtlz2}.neutral() == 0.5);
    CHECK(HBenchProblem{.variant = BenchVariant::hdtlz7}.neutral() == 0.0);
}

TEST_CASE("coupling regularizer")
{
    const std::vector<double> z{0.3, 0.0, 1.0, 0.0};
    CHECK(coupling(z, std::vector<std::size_t>{}, Topology::chain, 1.0) == 0.0);
    CHECK(coupling(z, std::vector<std::size_t>{3, 4}, Topology::chain, 1.0) == 1.0);
    CHECK(coupling(z, std::vector<std::size_t>{3, 4}, Topology::chain, 2.5) == 2.5);

    CHECK(parent_index(3, Topology::tree) == 2);
    CHECK(parent_index(4, Topology::tree) == 2);
    CHECK(parent_index(5, Topology::tree) == 3);
    CHECK(parent_index(6, Topology::tree) == 3);
    CHECK(parent_index(7, Topology::chain) == 6);
}

TEST_CASE("objective examples")
{
    const auto a = hdtlz2(tail_neutral(0.0, 0.5), 0.0);
    CHECK(a.f1 == doctest::Approx(1.0));
    CHECK(a.f2 == doctest::Approx(0.0));
    const auto b = hdtlz2(tail_neutral(1.0, 0.5), 0.0);
    CHECK(b.f1 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b.f2 == doctest::Approx(1.0));
    const auto c = hdtlz2(tail_neutral(0.5, 0.5), 0.0);
    CHECK(c.f1 == doctest::Approx(std::sqrt(0.5)));
    CHECK(c.f2 == doctest::Approx(std::sqrt(0.5)));

    const auto d = hdtlz7(tail_neutral(0.0, 0.0), 0.0);
    CHECK(d.f1 == 0.0);
    CHECK(d.f2 == doctest::Approx(1.0));
    const auto e = hdtlz7(tail_neutral(1.0, 0.0), 0.0);
    CHECK(e.f1 == 1.0);
    CHECK(e.f2 == doctest::Approx(0.5));
    const auto f = hdtlz7(tail_neutral(1.0 / 6.0, 0.0), 0.0);
    CHECK(f.f1 == doctest::Approx(1.0 / 6.0));
    CHECK(f.f2 == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("coupling never improves the objectives")
{
    for (double z1 = 0.05; z1 < 1.0; z1 += 0.1) {
        const auto base2 = hdtlz2(tail_neutral(z1, 0.5), 0.0);
        const auto worse2 = hdtlz2(tail_neutral(z1, 0.5), 0.3);
        CHECK(worse2.f1 >= base2.f1);
        CHECK(worse2.f2 >= base2.f2);
        const auto base7 = hdtlz7(tail_neutral(z1, 0.0), 0.0);
        const auto worse7 = hdtlz7(tail_neutral(z1, 0.0), 0.3);
        CHECK(worse7.f1 >= base7.f1);
        CHECK(worse7.f2 >= base7.f2);
    }
}

TEST_CASE("reference fronts")
{
    CHECK(reference_front(BenchVariant::hdtlz2, 2) == PointSet{{1.0, 0.0}, {0.0, 1.0}});
    for (const auto& p : reference_front(BenchVariant::hdtlz2, 1000)) {
        CHECK(p.f1 * p.f1 + p.f2 * p.f2 == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto front7 = reference_front(BenchVariant::hdtlz7, 1000);
    CHECK(front7.size() > 100);
    for (const auto& a : front7) {
        for (const auto& b : front7) {
            CHECK_FALSE(dominates(a, b));
        }
    }
}

TEST_CASE("neutral configurations lie on the analytic front")
{
    for (int i = 0; i <= 20; ++i) {
        const double z1 = i / 20.0;
        const auto p = hdtlz2(tail_neutral(z1, 0.5), 0.0);
        CHECK(p.f1 * p.f1 + p.f2 * p.f2 == doctest::Approx(1.0));
    }
}

TEST_CASE("a coarse lattice never beats the reference front")
{
    for (auto variant : {BenchVariant::hdtlz2, BenchVariant::hdtlz7}) {
        const auto front = reference_front(variant, 1000);
        for (int a = 0; a <= 40; ++a) {
            for (int b = 0; b <= 4; ++b) {
                auto z = tail_neutral(a / 40.0, variant == BenchVariant::hdtlz2 ? 0.5 : 0.0);
                z[1] = b / 4.0;
                const auto p = variant == BenchVariant::hdtlz2 ? hdtlz2(z, 0.0) : hdtlz7(z, 0.0);
                for (const auto& r : front) {
                    const bool strictly = p.f1 < r.f1 - 1e-9 && p.f2 < r.f2 - 1e-9;
                    CHECK_FALSE(strictly);
                }
            }
        }
    }
}

}
