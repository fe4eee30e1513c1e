#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "phmoea/moea.hpp"

using namespace phmoea;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Individual at(double f1, double f2)
{
    Individual ind;
    ind.f1 = f1;
    ind.f2 = f2;
    return ind;
}

Population random_population(Rng& rng, std::size_t n)
{
    Population pop;
    for (std::size_t i = 0; i < n; ++i) {
        // Integer grid forces ties and repeated values.
        pop.push_back(at(std::floor(rng.uniform(0.0, 8.0)) * 3.0 + 5.0, std::floor(rng.uniform(0.0, 8.0)) * 0.01));
    }
    return pop;
}

VariableSpec discrete(std::string name, std::size_t n)
{
    VariableSpec v;
    v.name = name;
    v.label = name;
    for (std::size_t i = 0; i < n; ++i) {
        v.candidates.push_back(static_cast<int>(i));
    }
    return v;
}

// Three always-active discrete dims plus one child of the first.
ConfigSpace small_space()
{
    auto child = discrete("d", 3);
    child.parent = ParentCondition{0, {1}};
    return ConfigSpace({discrete("a", 4), discrete("b", 6), discrete("c", 2), child});
}

Individual member(const ConfigSpace& space, const RefinementState& refine, std::vector<std::size_t> genes,
                  double weight)
{
    Genotype g(space.size());
    g.genes = std::move(genes);
    Individual ind;
    ind.genotype = repair(g, space, refine);
    ind.config = decode(ind.genotype, space, refine);
    ind.key = canonical_key(ind.config);
    ind.weight = weight;
    return ind;
}

BenchmarkEvaluator& bench2()
{
    static BenchmarkEvaluator ev(HBenchProblem{});
    return ev;
}

RunOptions small_run(std::uint64_t seed)
{
    RunOptions o;
    o.population = 20;
    o.generations = 12;
    o.seed = seed;
    o.stage = StageParams::benchmark();
    o.early_stopping = false;
    o.check_unique_keys = true;
    return o;
}

// Fails every evaluation whose key is divisible by 4.
class FlakyEvaluator final : public Evaluator {
public:
    const ConfigSpace& space() const override { return inner_.space(); }

protected:
    Evaluation evaluate(const DecodedConfig& d) override
    {
        if (canonical_key(d) % 4 == 0) {
            Evaluation e;
            e.status = EvalStatus::error;
            e.message = "injected failure";
            return e;
        }
        return eval_benchmark(d, inner_.space(), inner_.problem());
    }

private:
    BenchmarkEvaluator inner_{HBenchProblem{}};
};

} // namespace

TEST_SUITE("moea") {

TEST_CASE("per-generation normalization")
{
    Population pop{at(2, 1), at(4, 1), at(6, 1)};
    normalize_generation(pop);
    CHECK(pop[0].n1 == doctest::Approx(0.0));
    CHECK(pop[1].n1 == doctest::Approx(0.5));
    CHECK(pop[2].n1 == doctest::Approx(1.0));
    for (const auto& ind : pop) {
        CHECK(ind.n2 == 0.0);
    }
}

TEST_CASE("non-dominated sorting and crowding")
{
    Population nd{at(0, 1), at(0.5, 0.5), at(1, 0)};
    nd_sort_and_crowd(nd);
    for (const auto& ind : nd) {
        CHECK(ind.rank == 0);
    }
    CHECK(nd[0].crowding == kInf);
    CHECK(nd[2].crowding == kInf);
    // Normalized neighbour gaps: (1 - 0) / 1 in each objective.
    CHECK(nd[1].crowding == doctest::Approx(2.0));

    Population two{at(1, 1), at(2, 2)};
    nd_sort_and_crowd(two);
    CHECK(two[0].rank == 0);
    CHECK(two[1].rank == 1);
}

TEST_CASE("ranks are invariant under normalization")
{
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        auto pop = random_population(rng, 30);
        nd_sort_and_crowd(pop);
        normalize_generation(pop);
        std::vector<Point> raw;
        std::vector<Point> scaled;
        for (const auto& ind : pop) {
            raw.push_back(ind.objectives());
            scaled.push_back({ind.n1, ind.n2});
        }
        CHECK(nd_ranks(raw) == nd_ranks(scaled));
    }
}

TEST_CASE("stage scores")
{
    StageParams params;
    Individual ind;
    ind.rank = 0;
    ind.ncrowd = 1.0;
    CHECK(stage_score(ind, 0.1, params) == doctest::Approx(1.2));

    ind.n1 = 0.2;
    ind.n2 = 0.4;
    CHECK(params.alpha(0.45) == doctest::Approx(0.5));
    const double s = 1.0 + params.lambda * ind.ncrowd;
    const double g = params.w * 0.2 + (1 - params.w) * 0.4;
    CHECK(stage_score(ind, 0.45, params) == doctest::Approx(0.5 * s + 0.5 * g));

    ind.ncrowd = 0.0;
    CHECK(stage_score(ind, 0.9, params) == doctest::Approx(0.26));

    CHECK(params.stage(0.29) == 0);
    CHECK(params.stage(0.3) == 1);
    CHECK(params.stage(0.6) == 2);
}

TEST_CASE("weights form a simplex")
{
    Rng rng(9);
    for (double phi : {0.05, 0.35, 0.5, 0.95}) {
        auto pop = random_population(rng, 25);
        nd_sort_and_crowd(pop);
        compute_scores(pop, phi, StageParams{});
        double total = 0.0;
        for (const auto& ind : pop) {
            CHECK(ind.weight >= 0.0);
            total += ind.weight;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
    Population zeros(4);
    StageParams late;
    late.gamma = 0.0;
    compute_scores(zeros, 0.99, late);
    for (const auto& ind : zeros) {
        CHECK(ind.weight == 0.25);
    }
}

TEST_CASE("stage ratios")
{
    const StageParams params;
    for (double phi = 0.0; phi < 1.0; phi += 0.01) {
        const auto& r = params.ratios_at(phi);
        CHECK(r.parent + r.hot + r.nonhot == doctest::Approx(1.0));
    }
    const auto& early = params.ratios_at(0.1);
    CHECK(early.parent == 0.8);
    CHECK(early.hot == 0.1);
    CHECK(early.nonhot == 0.1);

    const auto c = offspring_counts(50, {0.6, 0.2, 0.2});
    CHECK(c.parent == 30);
    CHECK(c.hot == 10);
    CHECK(c.nonhot == 10);
}

TEST_CASE("archive accumulation")
{
    const auto space = small_space();
    const RefinementState refine(space);
    PlayerArchives arch(space.size());
    arch.update({member(space, refine, {0, 2, 1, 2}, 1.0)}, space, refine);
    CHECK(arch.at(0, 0) == PlayerStats{1.0, 1});
    CHECK(arch.at(1, 2) == PlayerStats{1.0, 1});
    CHECK(arch.at(2, 1) == PlayerStats{1.0, 1});
    // Dimension d is inactive when a != 1.
    CHECK(arch.at(3, 2) == PlayerStats{});

    PlayerArchives shared(space.size());
    shared.update({member(space, refine, {1, 0, 0, 2}, 0.25), member(space, refine, {1, 3, 1, 2}, 0.75)}, space,
                  refine);
    CHECK(shared.at(0, 1) == PlayerStats{1.0, 2});
    CHECK(shared.at(3, 2) == PlayerStats{1.0, 2});
    CHECK(shared.at(1, 0) == PlayerStats{0.25, 1});
}

TEST_CASE("archives follow interval splits")
{
    PlayerArchives arch(1);
    VariableSpec x;
    x.name = "x";
    x.label = "x";
    x.continuous = true;
    const ConfigSpace space({x});
    RefinementState refine(space, {.initial_bins = 6, .mass_threshold = 0.5, .persistence = 1});
    Population pop{member(space, refine, {3}, 1.0)};
    arch.update(pop, space, refine);
    std::vector<DecodedConfig> front{pop[0].config};
    refine.update(front);
    const auto events = refine.apply();
    REQUIRE(events.size() == 1);
    arch.split(events[0]);
    CHECK(arch.at(0, events[0].left_id) == PlayerStats{1.0, 1});
    CHECK(arch.at(0, events[0].right_id) == PlayerStats{1.0, 1});
    CHECK(arch.stats(0, space, refine).size() == 7);
}

TEST_CASE("player partition")
{
    std::vector<PlayerStats> six{{0.1, 3}, {0.9, 1}, {0.5, 0}, {0.2, 7}, {0.05, 2}, {0.3, 5}};
    const auto p = partition_players(six, 0.3, 0.2);
    CHECK(p.hot == std::vector<std::size_t>{1, 2});
    CHECK(p.cold == std::vector<std::size_t>{0, 4}); // counts 3 and 2 among the non-hot
    CHECK(p.normal == std::vector<std::size_t>{3, 5});

    std::vector<PlayerStats> two{{0.0, 0}, {0.0, 0}};
    const auto q = partition_players(two, 0.3, 0.2);
    CHECK(q.hot == std::vector<std::size_t>{0});
    CHECK(q.cold == std::vector<std::size_t>{1});
    CHECK(q.normal.empty());

    std::vector<PlayerStats> zero(6);
    const auto z = partition_players(zero, 0.3, 0.2);
    CHECK(z.hot == std::vector<std::size_t>{0, 1});
    CHECK(z.cold == std::vector<std::size_t>{2, 3});
    CHECK(z.normal == std::vector<std::size_t>{4, 5});
}

TEST_CASE("pool sampling")
{
    Rng rng(21);
    PlayerPartition part{{0}, {2, 3}, {1}};
    const int draws = 400000;
    int cold = 0;
    for (int i = 0; i < draws; ++i) {
        const auto c = sample_candidate(part, Pool::nonhot, 0.15, 4, rng);
        CHECK(c != 0);
        cold += c == 1;
    }
    const double p = 0.15 / 2.15;
    const double se = std::sqrt(p * (1 - p) / draws);
    CHECK(std::abs(static_cast<double>(cold) / draws - p) <= 4 * se);

    for (int i = 0; i < 100; ++i) {
        CHECK(sample_candidate(part, Pool::hot, 0.15, 4, rng) == 0);
    }

    PlayerPartition empty{{}, {}, {}};
    std::set<std::size_t> seen;
    for (int i = 0; i < 200; ++i) {
        seen.insert(sample_candidate(empty, Pool::hot, 0.15, 3, rng));
    }
    CHECK(seen == std::set<std::size_t>{0, 1, 2});
}

TEST_CASE("bounded sbx and polynomial mutation")
{
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const double a = rng.uniform();
        const double b = rng.uniform();
        const auto [c1, c2] = sbx_pair(a, b, 15.0, rng);
        CHECK(c1 >= 0.0);
        CHECK(c1 <= 1.0);
        CHECK(c2 >= 0.0);
        CHECK(c2 <= 1.0);
        const double m = polynomial_mutation(a, 20.0, rng);
        CHECK(m >= 0.0);
        CHECK(m <= 1.0);
    }
    const auto [e1, e2] = sbx_pair(0.3, 0.3, 15.0, rng);
    CHECK(e1 == 0.3);
    CHECK(e2 == 0.3);
}

TEST_CASE("variation identities")
{
    const auto& space = bench2().space();
    const RefinementState refine(space);
    Rng rng(17);
    const auto a = sample_random(space, refine, rng);
    const auto b = sample_random(space, refine, rng);

    VariationParams off;
    off.pc = 0.0;
    off.pm = 0.0;
    const auto [c1, c2] = crossover(a, b, space, refine, off, rng);
    CHECK(c1 == a);
    CHECK(c2 == b);
    auto copy = a;
    CHECK(mutate(copy, space, refine, off, 6, rng) == 0);
    CHECK(copy == a);

    VariationParams always;
    always.pc = 1.0;
    for (int i = 0; i < 50; ++i) {
        const auto [s1, s2] = crossover(a, a, space, refine, always, rng);
        CHECK(s1 == a);
        CHECK(s2 == a);
    }
}

TEST_CASE("mutation cap")
{
    const auto& space = bench2().space();
    const RefinementState refine(space);
    Rng rng(23);
    VariationParams params;
    params.pm = 1.0;
    std::size_t capped = 0;
    for (int i = 0; i < 2000; ++i) {
        auto g = sample_random(space, refine, rng);
        const auto before = g;
        const auto changed = mutate(g, space, refine, params, 1, rng);
        CHECK(changed <= 1);
        std::size_t diff = 0;
        for (std::size_t j = 0; j < space.size(); ++j) {
            diff += g.genes[j] != before.genes[j];
        }
        CHECK(diff <= 1);
        capped += changed == 1;
    }
    CHECK(capped > 0);
}

TEST_CASE("assembly without cross-pool mutation stays in its pool")
{
    const auto space = small_space();
    const RefinementState refine(space);
    DedupRegistry reg;
    Rng rng(3);
    OffspringContext ctx{space, refine, reg, rng};
    std::vector<PlayerPartition> parts{{{1}, {0, 3}, {2}}, {{4, 5}, {0, 1, 2}, {3}}, {{0}, {}, {1}}, {{2}, {1}, {0}}};
    StageParams params;
    params.e = 0.0;
    const auto kids = assemble(parts, Pool::hot, 10, params, ctx);
    CHECK_FALSE(kids.empty());
    std::set<std::uint64_t> keys;
    for (const auto& k : kids) {
        for (std::size_t j = 0; j < space.size(); ++j) {
            const auto& hot = parts[j].hot;
            CHECK(std::find(hot.begin(), hot.end(), k.genotype.genes[j]) != hot.end());
        }
        keys.insert(k.key);
    }
    // Only two distinct hot genotypes exist, so dedup skips the other slots.
    CHECK(kids.size() == 2);
    CHECK(keys.size() == kids.size());
}

TEST_CASE("environmental selection")
{
    Population nd;
    for (int i = 0; i < 10; ++i) {
        nd.push_back(at(i, 9 - i));
        nd.back().key = i;
    }
    CHECK(environmental_select(nd, 10).size() == 10);

    auto with_clones = nd;
    for (int i = 0; i < 10; ++i) {
        with_clones.push_back(at(i - 0.5, 9 - i - 0.5));
        with_clones.back().key = 100 + i;
    }
    for (const auto& ind : environmental_select(with_clones, 10)) {
        CHECK(ind.key >= 100);
    }

    const auto cut = environmental_select(nd, 4);
    std::set<std::uint64_t> kept;
    for (const auto& ind : cut) {
        kept.insert(ind.key);
    }
    CHECK(kept.contains(0));
    CHECK(kept.contains(9));
}

TEST_CASE("selection is elitist in each objective")
{
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        auto pop = random_population(rng, 20);
        auto offspring = random_population(rng, 20);
        double best1 = kInf;
        double best2 = kInf;
        for (const auto& ind : pop) {
            best1 = std::min(best1, ind.f1);
            best2 = std::min(best2, ind.f2);
        }
        pop.insert(pop.end(), offspring.begin(), offspring.end());
        const auto next = environmental_select(pop, 20);
        double next1 = kInf;
        double next2 = kInf;
        for (const auto& ind : next) {
            next1 = std::min(next1, ind.f1);
            next2 = std::min(next2, ind.f2);
        }
        CHECK(next1 <= best1);
        CHECK(next2 <= best2);
    }
}

TEST_CASE("early stopping")
{
    CHECK(relative_improvement(10.0, 9.0, 1e-12) == doctest::Approx(0.1));
    CHECK(relative_improvement(9.0, 10.0, 1e-12) == 0.0);
    CHECK(relative_gain(1.0, 1.5, 1e-12) == doctest::Approx(0.5));

    EarlyStopState state({.window = 3});
    for (int i = 0; i < 3; ++i) {
        state.record(1.0, 1.0, 0.5);
        CHECK_FALSE(state.should_stop());
    }
    state.record(1.0, 1.0, 0.5);
    CHECK(state.should_stop());

    EarlyStopState moving({.window = 3});
    for (int i = 0; i < 10; ++i) {
        moving.record(10.0 - i, 1.0, 0.5);
        CHECK_FALSE(moving.should_stop());
    }
}

TEST_CASE("runs respect the budget and never evaluate a key twice")
{
    const SearchProblem problem{"hdtlz2", &bench2(), reference_front(BenchVariant::hdtlz2, 200), Point{1.1, 1.1}};
    for (auto algo : {Algorithm::phmoea, Algorithm::nsga2}) {
        const auto r = run_search(algo, problem, small_run(5));
        CHECK(r.fes <= 20 * 12);
        CHECK(r.history.size() == 12);
        CHECK(r.history.back().fes == r.fes);
        std::set<std::uint64_t> keys(r.evaluated_keys.begin(), r.evaluated_keys.end());
        CHECK(keys.size() == r.evaluated_keys.size());
        CHECK(r.evaluated_keys.size() == r.fes);
        for (const auto& a : r.pareto) {
            for (const auto& b : r.pareto) {
                CHECK_FALSE(dominates(a.objectives(), b.objectives()));
            }
        }
        for (std::size_t g = 1; g < r.history.size(); ++g) {
            CHECK(r.history[g].fes >= r.history[g - 1].fes);
        }
    }
}

TEST_CASE("runs are deterministic per seed")
{
    const SearchProblem problem{"hdtlz2", &bench2(), reference_front(BenchVariant::hdtlz2, 200), Point{1.1, 1.1}};
    const auto a = run_phmoea(problem, small_run(9));
    const auto b = run_phmoea(problem, small_run(9));
    CHECK(a.history == b.history);
    CHECK(a.evaluated_keys == b.evaluated_keys);
    const auto c = run_phmoea(problem, small_run(10));
    CHECK(c.evaluated_keys != a.evaluated_keys);
}

TEST_CASE("failed evaluations consume budget and are dropped")
{
    FlakyEvaluator ev;
    const SearchProblem problem{"flaky", &ev, std::nullopt, Point{1.1, 1.1}};
    const auto r = run_phmoea(problem, small_run(4));
    CHECK(r.failures > 0);
    CHECK(ev.calls() == r.fes);
    for (const auto& ind : r.population) {
        CHECK(ind.key % 4 != 0);
    }
}

TEST_CASE("early stopping ends a stagnant run")
{
    RunOptions o = small_run(1);
    o.generations = 40;
    o.early_stopping = true;
    o.early_stop.window = 4;
    o.early_stop.eps_f1 = 1.0;
    o.early_stop.eps_f2 = 1.0;
    o.early_stop.eps_hv = 1.0;
    const SearchProblem problem{"hdtlz2", &bench2(), std::nullopt, std::nullopt};
    const auto r = run_phmoea(problem, o);
    CHECK(r.stopped_early);
    CHECK(r.history.size() == 5);
    CHECK(r.fes < 20 * 40);
}

}
