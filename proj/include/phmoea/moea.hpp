#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "phmoea/eval.hpp"
#include "phmoea/metrics.hpp"
#include "phmoea/rng.hpp"
#include "phmoea/space.hpp"

namespace phmoea {

constexpr double kNormEpsilon = 1e-12;

struct Individual {
    Genotype genotype;
    DecodedConfig config; // phenotype as evaluated
    std::uint64_t key = 0;
    double f1 = 0.0;
    double f2 = 0.0;

    std::size_t rank = 0; // 0 = non-dominated
    double crowding = 0.0;
    double n1 = 0.0; // per-generation normalized objectives and crowding
    double n2 = 0.0;
    double ncrowd = 0.0;
    double score = 0.0;
    double weight = 0.0;

    Point objectives() const { return {f1, f2}; }
};

using Population = std::vector<Individual>;

// Min-max normalization of f1, f2 and crowding over pop. Infinite crowding
// (front boundaries) maps to 1; finite values are scaled among themselves.
void normalize_generation(Population& pop, double eps = kNormEpsilon);

// 0-based non-domination ranks.
std::vector<std::size_t> nd_ranks(std::span<const Point> points);
// Crowding distance within each front; boundary points are infinite.
std::vector<double> crowding_distances(std::span<const Point> points, std::span<const std::size_t> ranks);
void nd_sort_and_crowd(Population& pop);

struct StageRatios {
    double parent = 0.0;
    double hot = 0.0;
    double nonhot = 0.0;
};

struct StageParams {
    double kappa1 = 0.3;
    double kappa2 = 0.6;
    double lambda = 0.2;
    double w = 0.7;
    double gamma = 0.05;
    std::array<StageRatios, 3> ratios{{{0.8, 0.1, 0.1}, {0.6, 0.2, 0.2}, {0.5, 0.3, 0.2}}};
    double q = 0.3;  // hot share by heat
    double p = 0.2;  // cold share by count
    double o = 0.15; // cold bonus
    double e = 0.1;  // cross-pool mutation rate
    std::size_t m_max = 6;

    // Thresholds and objective weight used on the synthetic benchmarks.
    static StageParams benchmark();

    void validate() const;
    // 0 early, 1 transition, 2 late.
    std::size_t stage(double phi) const;
    const StageRatios& ratios_at(double phi) const { return ratios[stage(phi)]; }
    double alpha(double phi) const { return (kappa2 - phi) / (kappa2 - kappa1); }
};

double stage_score(const Individual& ind, double phi, const StageParams& params);
// Sets score and weight; weights form a simplex (uniform when all scores are 0).
void compute_scores(Population& pop, double phi, const StageParams& params);

struct PlayerStats {
    double heat = 0.0;
    std::uint64_t count = 0;

    friend bool operator==(const PlayerStats&, const PlayerStats&) = default;
};

// Heat and count per (dimension, player). Discrete players are candidate
// indices; continuous players are stable interval ids, so entries survive
// refinement.
class PlayerArchives {
public:
    explicit PlayerArchives(std::size_t dims = 0) : dims_(dims) {}

    // Accumulates weight and one count on every active (dimension, gene).
    void update(const Population& pop, const ConfigSpace& space, const RefinementState& refine);
    // Both halves of a split interval inherit the parent's statistics.
    void split(const SplitEvent& event);

    PlayerStats at(std::size_t j, std::uint64_t player) const;
    // Statistics of every current choice of dimension j, in choice order.
    std::vector<PlayerStats> stats(std::size_t j, const ConfigSpace& space, const RefinementState& refine) const;
    std::size_t dims() const { return dims_.size(); }

private:
    std::vector<std::map<std::uint64_t, PlayerStats>> dims_;
};

std::uint64_t player_id(std::size_t j, std::size_t choice, const ConfigSpace& space, const RefinementState& refine);

struct PlayerPartition {
    std::vector<std::size_t> hot;
    std::vector<std::size_t> normal;
    std::vector<std::size_t> cold;
};

PlayerPartition partition_players(std::span<const PlayerStats> stats, double q, double p);

enum class Pool { hot, nonhot };

// Draws a choice index from one pool; an empty pool falls back to uniform
// over all n choices.
std::size_t sample_candidate(const PlayerPartition& part, Pool pool, double o, std::size_t n, Rng& rng);

struct VariationParams {
    double pc = 0.8;
    double pm = 0.2; // per-offspring mutation gate; per-dimension rate is 1/D
    double eta_c = 15.0;
    double eta_m = 20.0;
};

// Bounded SBX and polynomial mutation on [0, 1].
std::pair<double, double> sbx_pair(double x1, double x2, double eta, Rng& rng);
double polynomial_mutation(double x, double eta, Rng& rng);

std::pair<Genotype, Genotype> crossover(const Genotype& a, const Genotype& b, const ConfigSpace& space,
                                        const RefinementState& refine, const VariationParams& params, Rng& rng);
// Returns the number of dimensions whose gene changed.
std::size_t mutate(Genotype& g, const ConfigSpace& space, const RefinementState& refine,
                   const VariationParams& params, std::size_t m_max, Rng& rng);

// Binary tournament on (rank, crowding).
std::size_t tournament(const Population& pop, Rng& rng);

struct Candidate {
    Genotype genotype;
    DecodedConfig config;
    std::uint64_t key = 0;
};

// Repairs g, decodes it and admits its key. nullopt on a duplicate.
std::optional<Candidate> admit(Genotype g, const ConfigSpace& space, const RefinementState& refine,
                               DedupRegistry& registry);

struct OffspringContext {
    const ConfigSpace& space;
    const RefinementState& refine;
    DedupRegistry& registry;
    Rng& rng;
};

std::vector<Candidate> variation_sbx_pm(const Population& parents, std::size_t n, const VariationParams& params,
                                        std::size_t m_max, OffspringContext ctx);

// Assembled offspring: one draw per dimension from the given pool, then
// cross-pool mutation. partitions holds one entry per dimension.
std::vector<Candidate> assemble(std::span<const PlayerPartition> partitions, Pool pool, std::size_t n,
                                const StageParams& params, OffspringContext ctx);

struct OffspringCounts {
    std::size_t parent = 0;
    std::size_t hot = 0;
    std::size_t nonhot = 0;
};

OffspringCounts offspring_counts(std::size_t n, const StageRatios& ratios);

// Scores P_t, updates the archives and draws up to n offspring from the three
// sources. Slots whose dedup retries are exhausted are skipped.
std::vector<Candidate> generate_offspring(Population& pop, std::size_t n, PlayerArchives& archives, double phi,
                                          const StageParams& params, const VariationParams& variation,
                                          OffspringContext ctx);

// NSGA-II elitist truncation to min(n, |pop|) members.
Population environmental_select(Population pop, std::size_t n);

struct EarlyStopSettings {
    std::size_t window = 8;
    double eps0 = 1e-12;
    double eps_f1 = 1e-3;
    double eps_f2 = 1e-3;
    double eps_hv = 1e-4;
};

double relative_improvement(double before, double after, double eps0);
double relative_gain(double before, double after, double eps0);

class EarlyStopState {
public:
    explicit EarlyStopState(EarlyStopSettings settings = {}) : settings_(settings) {}

    const EarlyStopSettings& settings() const { return settings_; }

    // The reference point is fixed by the first call.
    void set_reference(const Population& initial);
    const std::optional<Point>& reference() const { return reference_; }

    void record(double mean_f1, double mean_f2, double hv);
    // Front means and HV of pop under the fixed reference.
    void record(const Population& pop);

    struct Deltas {
        double f1 = 0.0;
        double f2 = 0.0;
        double hv = 0.0;
    };
    std::optional<Deltas> deltas() const;
    bool should_stop() const;
    std::size_t length() const { return f1_.size(); }

private:
    EarlyStopSettings settings_;
    std::optional<Point> reference_;
    std::vector<double> f1_;
    std::vector<double> f2_;
    std::vector<double> hv_;
};

// Rank-0 members, ordered by (f1, f2, key).
Population pareto_members(const Population& pop);
PointSet front_points(const Population& pop);

struct SearchProblem {
    std::string name;
    Evaluator* evaluator = nullptr;
    std::optional<PointSet> reference_front; // enables IGD in the history
    std::optional<Point> hv_reference;       // history HV; defaults to the early-stop reference
};

struct RunOptions {
    std::size_t population = 50;
    std::size_t generations = 30; // T_max, counting the initial population
    std::uint64_t seed = 0;
    StageParams stage;
    VariationParams variation;
    RefineSettings refine;
    bool refinement = true;
    bool early_stopping = true;
    EarlyStopSettings early_stop;
    std::size_t dedup_trials = DedupRegistry::default_trials;
    bool check_unique_keys = false; // throw if a key is ever evaluated twice
    std::function<void(std::string_view)> log;
};

struct GenerationRecord {
    std::size_t gen = 0; // 1 is the initial population
    std::size_t fes = 0;
    double mean_f1 = 0.0;
    double mean_f2 = 0.0;
    double hv = 0.0;
    std::optional<double> igd;

    friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct RunResult {
    Population pareto;
    Population population;
    std::vector<GenerationRecord> history;
    std::size_t fes = 0;
    std::size_t failures = 0;
    bool stopped_early = false;
    std::vector<std::uint64_t> evaluated_keys;
    std::vector<SplitEvent> splits;
    RefinementState refine;
    std::optional<Point> early_stop_reference;
};

enum class Algorithm { phmoea, nsga2 };

std::string_view name(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view s);

RunResult run_search(Algorithm algorithm, const SearchProblem& problem, const RunOptions& options);
inline RunResult run_phmoea(const SearchProblem& problem, const RunOptions& options)
{
    return run_search(Algorithm::phmoea, problem, options);
}
inline RunResult run_nsga2(const SearchProblem& problem, const RunOptions& options)
{
    return run_search(Algorithm::nsga2, problem, options);
}

// Evaluates every candidate, running up to evaluator.concurrency() at once.
// Results are returned in candidate order.
std::vector<Evaluation> evaluate_batch(Evaluator& evaluator, std::span<const Candidate> batch);

} // namespace phmoea
