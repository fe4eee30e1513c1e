#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phmoea/bench.hpp"
#include "phmoea/eval.hpp"
#include "phmoea/moea.hpp"

namespace phmoea {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class ProblemKind { hdtlz2, hdtlz7, surrogate, external };

std::string_view name(ProblemKind p);
std::optional<ProblemKind> parse_problem(std::string_view s);

// Everything a search run depends on. Replaying a manifest reproduces its
// outputs byte for byte.
struct RunManifest {
    ProblemKind problem = ProblemKind::hdtlz2;
    Algorithm algorithm = Algorithm::phmoea;
    std::size_t population = 100;
    std::size_t generations = 100;
    std::uint64_t seed = 0; // first seed
    std::size_t seeds = 1;  // runs use seed, seed + 1, ...
    bool early_stopping = false;
    std::filesystem::path output;

    StageParams stage;
    VariationParams variation;
    RefineSettings refine;
    EarlyStopSettings early_stop;
    std::size_t dedup_trials = DedupRegistry::default_trials;

    HBenchProblem benchmark;
    SurrogateOptions surrogate;
    ExternalOptions external;

    // Problem-specific defaults: benchmarks N=100, T=100, no early stop and a
    // fine refinement threshold; configuration problems N=50, T=30 with
    // early stopping.
    static RunManifest defaults(ProblemKind problem);

    void validate() const; // throws UsageError
    Json to_json() const;
    // Missing fields keep the problem defaults; unknown fields are rejected.
    static RunManifest from_json(const Json& doc);

    RunOptions options(std::uint64_t run_seed) const;
};

// Builds the evaluator a manifest describes. The returned problem points
// into the evaluator, so keep both alive together.
struct ProblemInstance {
    std::unique_ptr<Evaluator> evaluator;
    SearchProblem problem;
};

ProblemInstance make_problem(const RunManifest& m);

std::string pareto_front_csv(const RunResult& r);
std::string history_csv(const RunResult& r);
Json pareto_configs(const RunResult& r, const ConfigSpace& space);

struct SeedSummary {
    std::uint64_t seed = 0;
    std::size_t fes = 0;
    std::size_t generations = 0;
    bool stopped_early = false;
    std::size_t pareto_size = 0;
    double hv = 0.0;
    std::optional<double> igd;
};

std::string summary_csv(const std::vector<SeedSummary>& runs);

// Runs every seed of m and writes seed-<s>/ directories, manifest.json and
// summary.csv under m.output.
std::vector<SeedSummary> cmd_search(const RunManifest& m, std::ostream& log, bool verbose = false);

struct IndicatorReport {
    std::optional<double> igd;
    double hv = 0.0;
};

IndicatorReport indicators(const PointSet& front, const std::optional<PointSet>& reference, const Point& r);
std::string format_indicators(const IndicatorReport& rep);

// Full command line front end; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace phmoea
