#include <doctest.h>

#include <cmath>
#include <set>

#include "phmoea/space.hpp"

using namespace phmoea;

namespace {

const ConfigSpace& space()
{
    static const ConfigSpace s = builtin_space();
    return s;
}

std::size_t dim(std::string_view name) { return space().index_of(name); }

std::size_t choice(std::string_view var, const Json& value)
{
    const auto& c = space()[dim(var)].candidates;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] == value) {
            return i;
        }
    }
    FAIL("no such candidate");
    return 0;
}

ConfigSpace unit_space(double upper)
{
    VariableSpec v;
    v.name = "x";
    v.label = "x";
    v.continuous = true;
    v.upper = upper;
    return ConfigSpace({v});
}

DecodedConfig front_member(const ConfigSpace& s, const RefinementState& r, std::size_t j, std::size_t bin)
{
    Genotype g(s.size());
    g.genes[j] = bin;
    return decode(repair(g, s, r), s, r);
}

} // namespace

TEST_SUITE("space") {

TEST_CASE("builtin space matches the published variable table")
{
    const auto& s = space();
    CHECK(s.size() == 24);
    const auto& lp = s[2]; // x3, the aligned length
    CHECK(lp.name == "aligned_length");
    CHECK(lp.candidates == std::vector<Json>{8, 12, 24, 36, 48});

    const auto& pool = s[dim("pool_type")];
    REQUIRE(pool.parent.has_value());
    CHECK(pool.parent->parent == dim("resampling"));
    CHECK(pool.parent->activating == std::vector<std::size_t>{choice("resampling", "pool")});

    const auto& lr = s[dim("learning_rate")];
    CHECK(lr.continuous);
    CHECK(lr.lower == 1e-5);
    CHECK(lr.upper == 1e-2);
    CHECK(lr.scale == Scale::log);
    CHECK(s[dim("weight_decay")].scale == Scale::log);
    CHECK(s[dim("dropout")].scale == Scale::linear);

    CHECK(s[dim("scheduler_type")].parent->activating == std::vector<std::size_t>{choice("lr_scheduler", "on")});
    CHECK(s[dim("combined_loss_pair")].parent->activating ==
          std::vector<std::size_t>{choice("loss", "Combined"), choice("loss", "AdaptiveCombined")});
    CHECK(s[dim("loss_weights")].parent->activating == std::vector<std::size_t>{choice("loss", "AdaptiveCombined")});
    CHECK(s[dim("loss_weight_lr")].parent->activating == std::vector<std::size_t>{choice("loss", "AdaptiveCombined")});
    CHECK(s[dim("weighting_mode")].parent->activating == std::vector<std::size_t>{choice("fusion", "weighting")});
    CHECK(s[dim("cross_mapping_mode")].parent->activating ==
          std::vector<std::size_t>{choice("fusion", "cross_mapping")});
}

TEST_CASE("space survives a json round trip")
{
    const auto back = ConfigSpace::from_json(space().to_json());
    CHECK(back.to_json() == space().to_json());
}

TEST_CASE("bin_value worked examples")
{
    CHECK(bin_value(0.0, 0.5, 6, 1, Scale::linear) == doctest::Approx(0.5 / 12).epsilon(1e-12));
    CHECK(bin_value(1e-5, 1e-2, 6, 1, Scale::log) == doctest::Approx(1e-5 * std::pow(10.0, 0.25)).epsilon(1e-12));
    CHECK(bin_value(1e-5, 1e-2, 6, 1, Scale::log) == doctest::Approx(1.77828e-5).epsilon(1e-5));
    CHECK(bin_value(-3.0, 7.0, 1, 1, Scale::linear) == doctest::Approx(2.0));
    CHECK_THROWS(bin_value(0.0, 1.0, 6, 0, Scale::linear));
    CHECK_THROWS(bin_value(0.0, 1.0, 6, 7, Scale::linear));
    CHECK_THROWS(bin_value(1.0, 0.0, 6, 1, Scale::linear));
    CHECK_THROWS(bin_value(0.0, 1.0, 6, 1, Scale::log));
}

TEST_CASE("decode masks inactive variables")
{
    const auto& s = space();
    const RefinementState r(s);
    Genotype g(s.size());
    g.genes[dim("resampling")] = choice("resampling", "linear");
    g.genes[dim("fusion")] = choice("fusion", "weighting");
    const auto d = decode(repair(g, s, r), s, r);
    CHECK_FALSE(d.active(dim("pool_type")));
    CHECK(d.active(dim("weighting_mode")));
    CHECK_FALSE(d.active(dim("cross_mapping_mode")));

    auto other = g;
    other.genes[dim("pool_type")] = 3;
    other.genes[dim("cross_mapping_mode")] = 2;
    const auto d2 = decode(repair(other, s, r), s, r);
    CHECK(d2 == d);
    CHECK(canonical_key(d2) == canonical_key(d));
}

TEST_CASE("repair clips, freezes and restores")
{
    const auto& s = space();
    const RefinementState r(s);
    Genotype g(s.size());
    g.genes[dim("dropout")] = 9;
    g = repair(g, s, r);
    CHECK(g.genes[dim("dropout")] == 5); // 0-based last of 6 bins

    const auto pool = choice("resampling", "pool");
    g.genes[dim("resampling")] = pool;
    g.genes[dim("pool_type")] = 2;
    g = repair(g, s, r);
    CHECK(g.genes[dim("pool_type")] == 2);

    g.genes[dim("resampling")] = choice("resampling", "linear");
    g = repair(g, s, r);
    g.genes[dim("pool_type")] = 0; // an inactive gene disturbed by variation
    g = repair(g, s, r);
    g.genes[dim("resampling")] = pool;
    g = repair(g, s, r);
    CHECK(g.genes[dim("pool_type")] == 2);
}

TEST_CASE("random genotypes satisfy every parent rule after repair")
{
    const auto& s = space();
    const RefinementState r(s);
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        Genotype g(s.size());
        for (auto& gene : g.genes) {
            gene = rng.index(12);
        }
        for (auto& f : g.frozen) {
            f = rng.index(12);
        }
        const auto fixed = repair(g, s, r);
        CHECK(repair(fixed, s, r) == fixed);
        const auto d = decode(fixed, s, r);
        for (std::size_t j = 0; j < s.size(); ++j) {
            CHECK(fixed.genes[j] < choice_count(s, r, j));
            bool expect = true;
            if (s[j].parent) {
                const auto p = s[j].parent->parent;
                const auto& act = s[j].parent->activating;
                expect = d.active(p) &&
                         std::find(act.begin(), act.end(), d.values[p]->choice) != act.end();
            }
            CHECK(d.active(j) == expect);
            if (d.active(j) && s[j].continuous) {
                CHECK(d.values[j]->real >= s[j].lower);
                CHECK(d.values[j]->real <= s[j].upper);
            }
        }
    }
}

TEST_CASE("canonical keys ignore inactive genes only")
{
    const auto& s = space();
    const RefinementState r(s);
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto g = sample_random(s, r, rng);
        const auto d = decode(g, s, r);
        const auto key = canonical_key(d);
        CHECK(canonical_key(decode(g, s, r)) == key);

        auto shaken = g;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (!d.active(j)) {
                shaken.genes[j] = rng.index(choice_count(s, r, j));
            }
        }
        CHECK(canonical_key(decode(repair(shaken, s, r), s, r)) == key);

        auto changed = g;
        const auto j = dim("batch_size");
        changed.genes[j] = (changed.genes[j] + 1) % choice_count(s, r, j);
        CHECK(canonical_key(decode(repair(changed, s, r), s, r)) != key);
    }
}

TEST_CASE("dedup registry")
{
    DedupRegistry reg;
    CHECK(reg.trials() == 50);
    CHECK(reg.admit(42) == Admission::admitted);
    CHECK(reg.size() == 1);
    CHECK(reg.admit(42) == Admission::duplicate);
    CHECK(reg.size() == 1);
    CHECK(reg.contains(42));
}

TEST_CASE("sampling is uniform and deterministic")
{
    const auto& s = space();
    const RefinementState r(s);
    Rng a(3);
    Rng b(3);
    for (int i = 0; i < 20; ++i) {
        CHECK(sample_random(s, r, a) == sample_random(s, r, b));
    }

    Rng rng(5);
    const auto j = dim("batch_size");
    std::array<int, 4> counts{};
    for (int i = 0; i < 1000; ++i) {
        const auto g = sample_random(s, r, rng);
        REQUIRE(g.genes[j] < 4);
        ++counts[g.genes[j]];
    }
    for (int c : counts) {
        CHECK(c >= 200);
        CHECK(c <= 300);
    }
}

TEST_CASE("refinement counters follow interval mass")
{
    const auto s = unit_space(0.5);
    RefinementState r(s, {.initial_bins = 6, .mass_threshold = 0.5, .persistence = 3});

    std::vector<DecodedConfig> concentrated(4, front_member(s, r, 0, 2));
    const auto m = r.masses(0, concentrated);
    CHECK(m == std::vector<double>{0, 0, 1, 0, 0, 0});
    r.update(concentrated);
    CHECK(std::vector<unsigned>(r.partition(0).counters().begin(), r.partition(0).counters().end()) ==
          std::vector<unsigned>{0, 0, 1, 0, 0, 0});

    std::vector<DecodedConfig> spread;
    for (std::size_t k = 0; k < 6; ++k) {
        spread.push_back(front_member(s, r, 0, k));
    }
    const auto ms = r.masses(0, spread);
    double total = 0.0;
    for (double v : ms) {
        total += v;
    }
    CHECK(total == doctest::Approx(1.0));
    r.update(spread);
    for (unsigned c : r.partition(0).counters()) {
        CHECK(c == 0);
    }

    r.update({});
    CHECK(r.partition(0).bins() == 6);
}

TEST_CASE("persistent mass splits an interval at its midpoint")
{
    const auto s = unit_space(0.5);
    RefinementState r(s, {.initial_bins = 6, .mass_threshold = 0.5, .persistence = 3});
    std::vector<DecodedConfig> front(3, front_member(s, r, 0, 2));

    CHECK(r.apply().empty());
    for (int i = 0; i < 3; ++i) {
        r.update(front);
    }
    const auto events = r.apply();
    REQUIRE(events.size() == 1);
    CHECK(events[0].bin == 2);
    const auto& part = r.partition(0);
    CHECK(part.bins() == 7);
    const auto bp = part.breakpoints();
    REQUIRE(bp.size() == 8);
    CHECK(bp[3] == doctest::Approx(bin_value(0.0, 0.5, 6, 3, Scale::linear)));
    CHECK(bp.front() == 0.0);
    CHECK(bp.back() == 0.5);
    for (unsigned c : part.counters()) {
        CHECK(c == 0);
    }
    // The two halves have fresh ids and their midpoints as representatives.
    CHECK(part.id(2) == events[0].left_id);
    CHECK(part.id(3) == events[0].right_id);
    CHECK(part.representative(2) == doctest::Approx((bp[2] + bp[3]) / 2));
}

TEST_CASE("breakpoints stay ordered under repeated refinement")
{
    const auto& s = space();
    RefinementState r(s, {.initial_bins = 6, .mass_threshold = 0.1, .persistence = 1});
    Rng rng(13);
    for (int round = 0; round < 30; ++round) {
        std::vector<DecodedConfig> front;
        for (int i = 0; i < 4; ++i) {
            front.push_back(decode(sample_random(s, r, rng), s, r));
        }
        r.update(front);
        r.apply();
    }
    for (std::size_t j = 0; j < s.size(); ++j) {
        if (!r.tracks(j)) {
            continue;
        }
        const auto& part = r.partition(j);
        CHECK(part.bins() > 6);
        const auto bp = part.breakpoints();
        CHECK(bp.front() == doctest::Approx(s[j].lower));
        CHECK(bp.back() == doctest::Approx(s[j].upper));
        for (std::size_t k = 1; k < bp.size(); ++k) {
            CHECK(bp[k] > bp[k - 1]);
        }
        std::set<std::uint64_t> ids(part.ids().begin(), part.ids().end());
        CHECK(ids.size() == part.bins());
    }
}

TEST_CASE("remap moves genes to the nearest new bin")
{
    const auto s = unit_space(1.0);
    RefinementState before(s, {.initial_bins = 4, .mass_threshold = 0.5, .persistence = 1});
    auto after = before;
    std::vector<DecodedConfig> front(2, front_member(s, before, 0, 1));
    after.update(front);
    REQUIRE(after.apply().size() == 1);

    for (std::size_t bin = 0; bin < 4; ++bin) {
        Genotype g(1);
        g.genes[0] = bin;
        g.frozen[0] = bin;
        const auto moved = remap(g, s, before, after);
        const double old_value = before.partition(0).representative(bin);
        const auto& np = after.partition(0);
        const double got = std::abs(np.representative(moved.genes[0]) - old_value);
        for (std::size_t k = 0; k < np.bins(); ++k) {
            CHECK(got <= std::abs(np.representative(k) - old_value) + 1e-15);
        }
    }
}

}
