#include "phmoea/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "phmoea/io.hpp"
#include "phmoea/netspec.hpp"
#include "phmoea/resample.hpp"

namespace phmoea {

namespace fs = std::filesystem;

std::string_view name(ProblemKind p)
{
    switch (p) {
    case ProblemKind::hdtlz2:
        return "hdtlz2";
    case ProblemKind::hdtlz7:
        return "hdtlz7";
    case ProblemKind::surrogate:
        return "surrogate";
    case ProblemKind::external:
        return "external";
    }
    return "?";
}

std::optional<ProblemKind> parse_problem(std::string_view s)
{
    for (auto p : {ProblemKind::hdtlz2, ProblemKind::hdtlz7, ProblemKind::surrogate, ProblemKind::external}) {
        if (s == name(p)) {
            return p;
        }
    }
    return std::nullopt;
}

namespace {

bool is_benchmark(ProblemKind p) { return p == ProblemKind::hdtlz2 || p == ProblemKind::hdtlz7; }

// Refinement threshold for the synthetic benchmarks: an interval splits once
// it keeps more than 1% of the front for H generations. The 0.5 default
// never fires on a front spread evenly over six bins.
constexpr double kBenchmarkMassThreshold = 0.01;

} // namespace

RunManifest RunManifest::defaults(ProblemKind problem)
{
    RunManifest m;
    m.problem = problem;
    if (is_benchmark(problem)) {
        m.population = 100;
        m.generations = 100;
        m.early_stopping = false;
        m.stage = StageParams::benchmark();
        m.refine.mass_threshold = kBenchmarkMassThreshold;
        m.benchmark.variant = problem == ProblemKind::hdtlz2 ? BenchVariant::hdtlz2 : BenchVariant::hdtlz7;
    } else {
        m.population = 50;
        m.generations = 30;
        m.early_stopping = true;
    }
    return m;
}

void RunManifest::validate() const
{
    auto require = [](bool ok, std::string_view what) {
        if (!ok) {
            throw UsageError(std::string(what));
        }
    };
    require(population >= 2, "population must be at least 2");
    require(generations >= 1, "generations must be at least 1");
    require(seeds >= 1, "seeds must be at least 1");
    require(!output.empty(), "output directory is empty");
    try {
        stage.validate();
    } catch (const std::invalid_argument& ex) {
        throw UsageError(ex.what());
    }
    require(stage.m_max >= 1, "m_max must be at least 1");
    require(0.0 <= variation.pc && variation.pc <= 1.0, "pc must lie in [0, 1]");
    require(0.0 <= variation.pm && variation.pm <= 1.0, "pm must lie in [0, 1]");
    require(variation.eta_c >= 0.0 && variation.eta_m >= 0.0, "distribution indices must be non-negative");
    require(refine.initial_bins >= 1, "initial_bins must be at least 1");
    require(0.0 <= refine.mass_threshold && refine.mass_threshold <= 1.0, "mass_threshold must lie in [0, 1]");
    require(refine.persistence >= 1, "persistence must be at least 1");
    require(early_stop.window >= 1, "early-stop window must be at least 1");
    require(early_stop.eps0 > 0.0 && early_stop.eps_f1 >= 0.0 && early_stop.eps_f2 >= 0.0 &&
                early_stop.eps_hv >= 0.0,
            "early-stop thresholds must be non-negative");
    require(dedup_trials >= 1, "dedup_trials must be at least 1");
    if (is_benchmark(problem)) {
        try {
            benchmark.validate();
        } catch (const std::invalid_argument& ex) {
            throw UsageError(ex.what());
        }
    }
    if (problem == ProblemKind::surrogate) {
        require(surrogate.targets >= 1 && surrogate.input_channels >= 1, "surrogate targets and channels must be >= 1");
    }
    if (problem == ProblemKind::external) {
        require(!external.command.empty(), "external problem needs a worker command");
        require(external.workers >= 1, "external problem needs at least one worker");
        require(external.timeout.count() > 0, "worker timeout must be positive");
        require(external.targets >= 1, "targets must be at least 1");
    }
}

Json RunManifest::to_json() const
{
    Json ratios = Json::array();
    for (const auto& r : stage.ratios) {
        ratios.push_back({r.parent, r.hot, r.nonhot});
    }
    Json doc{
        {"problem", name(problem)},
        {"algorithm", name(algorithm)},
        {"population", population},
        {"generations", generations},
        {"seed", seed},
        {"seeds", seeds},
        {"early_stopping", early_stopping},
        {"output", output.string()},
        {"stage",
         {{"kappa1", stage.kappa1},
          {"kappa2", stage.kappa2},
          {"lambda", stage.lambda},
          {"w", stage.w},
          {"gamma", stage.gamma},
          {"ratios", ratios},
          {"q", stage.q},
          {"p", stage.p},
          {"o", stage.o},
          {"e", stage.e},
          {"m_max", stage.m_max}}},
        {"variation",
         {{"pc", variation.pc}, {"pm", variation.pm}, {"eta_c", variation.eta_c}, {"eta_m", variation.eta_m}}},
        {"refine",
         {{"initial_bins", refine.initial_bins},
          {"mass_threshold", refine.mass_threshold},
          {"persistence", refine.persistence}}},
        {"early_stop",
         {{"window", early_stop.window},
          {"eps0", early_stop.eps0},
          {"eps_f1", early_stop.eps_f1},
          {"eps_f2", early_stop.eps_f2},
          {"eps_hv", early_stop.eps_hv}}},
        {"dedup_trials", dedup_trials},
    };
    if (is_benchmark(problem)) {
        doc["benchmark"] = {{"n", benchmark.n}, {"topology", name(benchmark.topology)}, {"gamma", benchmark.gamma}};
    } else if (problem == ProblemKind::surrogate) {
        doc["surrogate"] = {{"targets", surrogate.targets},
                            {"input_channels", surrogate.input_channels},
                            {"stagnant", surrogate.stagnant}};
    } else {
        doc["external"] = {{"command", external.command},
                           {"workers", external.workers},
                           {"timeout_ms", external.timeout.count()},
                           {"targets", external.targets}};
    }
    return doc;
}

namespace {

// Reads fields out of one JSON object and rejects any it was not asked for.
class Fields {
public:
    Fields(const Json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            throw UsageError(fmt::format("{} must be an object", path_));
        }
    }

    template <typename T>
    void read(const std::string& key, T& dst)
    {
        const auto it = obj_.find(key);
        if (it == obj_.end()) {
            return;
        }
        seen_.insert(key);
        if constexpr (std::is_same_v<T, bool>) {
            check(it->is_boolean(), key, "a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            // Non-negative values may be stored as signed integers.
            check(it->is_number_unsigned() || (it->is_number_integer() && it->template get<std::int64_t>() >= 0), key,
                  "a non-negative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            check(it->is_number(), key, "a number");
        } else {
            check(it->is_string(), key, "a string");
        }
        dst = it->template get<T>();
    }

    const Json* sub(const std::string& key)
    {
        const auto it = obj_.find(key);
        if (it == obj_.end()) {
            return nullptr;
        }
        seen_.insert(key);
        return &*it;
    }

    std::string child(const std::string& key) const { return path_ + "." + key; }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.contains(it.key())) {
                throw UsageError(fmt::format("unknown manifest field {}.{}", path_, it.key()));
            }
        }
    }

private:
    void check(bool ok, const std::string& key, std::string_view what) const
    {
        if (!ok) {
            throw UsageError(fmt::format("manifest field {}.{} must be {}", path_, key, what));
        }
    }

    const Json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

} // namespace

RunManifest RunManifest::from_json(const Json& doc)
{
    if (!doc.is_object()) {
        throw UsageError("manifest must be a JSON object");
    }
    std::string problem_name = "hdtlz2";
    if (doc.contains("problem")) {
        if (!doc["problem"].is_string()) {
            throw UsageError("manifest field problem must be a string");
        }
        problem_name = doc["problem"].get<std::string>();
    }
    const auto problem = parse_problem(problem_name);
    if (!problem) {
        throw UsageError(fmt::format("unknown problem '{}' (expected hdtlz2, hdtlz7, surrogate or external)",
                                     problem_name));
    }
    auto m = defaults(*problem);

    Fields top(doc, "manifest");
    top.read("problem", problem_name);
    std::string algo = std::string(name(m.algorithm));
    top.read("algorithm", algo);
    const auto parsed_algo = parse_algorithm(algo);
    if (!parsed_algo) {
        throw UsageError(fmt::format("unknown algorithm '{}' (expected phmoea or nsga2)", algo));
    }
    m.algorithm = *parsed_algo;
    top.read("population", m.population);
    top.read("generations", m.generations);
    top.read("seed", m.seed);
    top.read("seeds", m.seeds);
    top.read("early_stopping", m.early_stopping);
    std::string output;
    top.read("output", output);
    m.output = output;
    top.read("dedup_trials", m.dedup_trials);

    if (const auto* s = top.sub("stage")) {
        Fields f(*s, top.child("stage"));
        f.read("kappa1", m.stage.kappa1);
        f.read("kappa2", m.stage.kappa2);
        f.read("lambda", m.stage.lambda);
        f.read("w", m.stage.w);
        f.read("gamma", m.stage.gamma);
        f.read("q", m.stage.q);
        f.read("p", m.stage.p);
        f.read("o", m.stage.o);
        f.read("e", m.stage.e);
        f.read("m_max", m.stage.m_max);
        if (const auto* r = f.sub("ratios")) {
            if (!r->is_array() || r->size() != 3) {
                throw UsageError("manifest field stage.ratios must hold three triples");
            }
            for (std::size_t k = 0; k < 3; ++k) {
                const auto& t = (*r)[k];
                if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() || !t[2].is_number()) {
                    throw UsageError("manifest field stage.ratios must hold three numeric triples");
                }
                m.stage.ratios[k] = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>()};
            }
        }
        f.finish();
    }
    if (const auto* s = top.sub("variation")) {
        Fields f(*s, top.child("variation"));
        f.read("pc", m.variation.pc);
        f.read("pm", m.variation.pm);
        f.read("eta_c", m.variation.eta_c);
        f.read("eta_m", m.variation.eta_m);
        f.finish();
    }
    if (const auto* s = top.sub("refine")) {
        Fields f(*s, top.child("refine"));
        f.read("initial_bins", m.refine.initial_bins);
        f.read("mass_threshold", m.refine.mass_threshold);
        f.read("persistence", m.refine.persistence);
        f.finish();
    }
    if (const auto* s = top.sub("early_stop")) {
        Fields f(*s, top.child("early_stop"));
        f.read("window", m.early_stop.window);
        f.read("eps0", m.early_stop.eps0);
        f.read("eps_f1", m.early_stop.eps_f1);
        f.read("eps_f2", m.early_stop.eps_f2);
        f.read("eps_hv", m.early_stop.eps_hv);
        f.finish();
    }
    if (const auto* s = top.sub("benchmark")) {
        Fields f(*s, top.child("benchmark"));
        f.read("n", m.benchmark.n);
        std::string topology = std::string(name(m.benchmark.topology));
        f.read("topology", topology);
        const auto t = parse_topology(topology);
        if (!t) {
            throw UsageError(fmt::format("unknown topology '{}' (expected chain or tree)", topology));
        }
        m.benchmark.topology = *t;
        f.read("gamma", m.benchmark.gamma);
        f.finish();
    }
    if (const auto* s = top.sub("surrogate")) {
        Fields f(*s, top.child("surrogate"));
        f.read("targets", m.surrogate.targets);
        f.read("input_channels", m.surrogate.input_channels);
        f.read("stagnant", m.surrogate.stagnant);
        f.finish();
    }
    if (const auto* s = top.sub("external")) {
        Fields f(*s, top.child("external"));
        f.read("command", m.external.command);
        f.read("workers", m.external.workers);
        std::uint64_t timeout = static_cast<std::uint64_t>(m.external.timeout.count());
        f.read("timeout_ms", timeout);
        m.external.timeout = std::chrono::milliseconds(timeout);
        f.read("targets", m.external.targets);
        f.finish();
    }
    top.finish();
    return m;
}

RunOptions RunManifest::options(std::uint64_t run_seed) const
{
    RunOptions o;
    o.population = population;
    o.generations = generations;
    o.seed = run_seed;
    o.stage = stage;
    o.variation = variation;
    o.refine = refine;
    o.early_stopping = early_stopping;
    o.early_stop = early_stop;
    o.dedup_trials = dedup_trials;
    return o;
}

ProblemInstance make_problem(const RunManifest& m)
{
    ProblemInstance inst;
    inst.problem.name = std::string(name(m.problem));
    switch (m.problem) {
    case ProblemKind::hdtlz2:
    case ProblemKind::hdtlz7:
        inst.evaluator = std::make_unique<BenchmarkEvaluator>(m.benchmark);
        inst.problem.reference_front = reference_front(m.benchmark.variant, 1000);
        inst.problem.hv_reference = Point{1.1, 1.1};
        break;
    case ProblemKind::surrogate:
        inst.evaluator = std::make_unique<SurrogateEvaluator>(builtin_space(), m.surrogate);
        break;
    case ProblemKind::external:
        inst.evaluator = std::make_unique<ExternalEvaluator>(builtin_space(), m.external);
        break;
    }
    inst.problem.evaluator = inst.evaluator.get();
    return inst;
}

std::string pareto_front_csv(const RunResult& r)
{
    std::string out = "f1,f2,canonical_key\n";
    for (const auto& ind : r.pareto) {
        out += fmt::format("{},{},{}\n", format_double(ind.f1), format_double(ind.f2), format_key(ind.key));
    }
    return out;
}

std::string history_csv(const RunResult& r)
{
    std::string out = "gen,fes,mean_f1_front,mean_f2_front,hv,igd\n";
    for (const auto& h : r.history) {
        out += fmt::format("{},{},{},{},{},{}\n", h.gen, h.fes, format_double(h.mean_f1), format_double(h.mean_f2),
                           format_double(h.hv), h.igd ? format_double(*h.igd) : std::string());
    }
    return out;
}

Json pareto_configs(const RunResult& r, const ConfigSpace& space)
{
    Json out = Json::array();
    for (const auto& ind : r.pareto) {
        out.push_back({{"key", format_key(ind.key)},
                       {"f1", ind.f1},
                       {"f2", ind.f2},
                       {"config", to_json(ind.config, space)}});
    }
    return out;
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& xs)
{
    if (xs.empty()) {
        return {0.0, 0.0};
    }
    double mean = 0.0;
    for (double x : xs) {
        mean += x;
    }
    mean /= static_cast<double>(xs.size());
    if (xs.size() < 2) {
        return {mean, 0.0};
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

} // namespace

std::string summary_csv(const std::vector<SeedSummary>& runs)
{
    std::string out = "seed,fes,generations,stopped_early,pareto_size,final_hv,final_igd\n";
    std::vector<double> fes, gens, stops, sizes, hvs, igds;
    for (const auto& s : runs) {
        out += fmt::format("{},{},{},{},{},{},{}\n", s.seed, s.fes, s.generations, s.stopped_early ? 1 : 0,
                           s.pareto_size, format_double(s.hv), s.igd ? format_double(*s.igd) : std::string());
        fes.push_back(static_cast<double>(s.fes));
        gens.push_back(static_cast<double>(s.generations));
        stops.push_back(s.stopped_early ? 1.0 : 0.0);
        sizes.push_back(static_cast<double>(s.pareto_size));
        hvs.push_back(s.hv);
        if (s.igd) {
            igds.push_back(*s.igd);
        }
    }
    const bool have_igd = !runs.empty() && igds.size() == runs.size();
    for (int which = 0; which < 2; ++which) {
        auto pick = [&](const std::vector<double>& xs) {
            const auto [m, sd] = mean_std(xs);
            return format_double(which == 0 ? m : sd);
        };
        out += fmt::format("{},{},{},{},{},{},{}\n", which == 0 ? "mean" : "std", pick(fes), pick(gens), pick(stops),
                           pick(sizes), pick(hvs), have_igd ? pick(igds) : std::string());
    }
    return out;
}

std::vector<SeedSummary> cmd_search(const RunManifest& m, std::ostream& log, bool verbose)
{
    m.validate();
    fs::create_directories(m.output);
    write_file(m.output / "manifest.json", m.to_json().dump(2) + "\n");

    std::vector<SeedSummary> runs;
    for (std::size_t k = 0; k < m.seeds; ++k) {
        const auto seed = m.seed + k;
        auto inst = make_problem(m);
        auto options = m.options(seed);
        if (verbose) {
            options.log = [&log, seed](std::string_view msg) { log << fmt::format("[seed {}] {}\n", seed, msg); };
        }
        const auto result = run_search(m.algorithm, inst.problem, options);

        const auto dir = m.output / fmt::format("seed-{}", seed);
        fs::create_directories(dir);
        auto echo = m;
        echo.seed = seed;
        echo.seeds = 1;
        write_file(dir / "manifest.json", echo.to_json().dump(2) + "\n");
        write_file(dir / "pareto_front.csv", pareto_front_csv(result));
        write_file(dir / "history.csv", history_csv(result));
        write_file(dir / "pareto_configs.json",
                   pareto_configs(result, inst.evaluator->space()).dump(2) + "\n");

        SeedSummary s;
        s.seed = seed;
        s.fes = result.fes;
        s.generations = result.history.size();
        s.stopped_early = result.stopped_early;
        s.pareto_size = result.pareto.size();
        s.hv = result.history.back().hv;
        s.igd = result.history.back().igd;
        log << fmt::format("seed {}: {} FEs, {} generations, front {} points, HV {:.7f}{}{}\n", seed, s.fes,
                           s.generations, s.pareto_size, s.hv,
                           s.igd ? fmt::format(", IGD {:.7f}", *s.igd) : std::string(),
                           s.stopped_early ? " (early stop)" : "");
        if (result.failures > 0) {
            log << fmt::format("seed {}: {} evaluation(s) failed\n", seed, result.failures);
        }
        runs.push_back(s);
    }
    write_file(m.output / "summary.csv", summary_csv(runs));
    return runs;
}

IndicatorReport indicators(const PointSet& front, const std::optional<PointSet>& reference, const Point& r)
{
    IndicatorReport rep;
    rep.hv = hv(front, r);
    if (reference) {
        rep.igd = igd(front, *reference);
    }
    return rep;
}

std::string format_indicators(const IndicatorReport& rep)
{
    std::string out;
    if (rep.igd) {
        out += fmt::format("IGD {:.7f}\n", *rep.igd);
    }
    out += fmt::format("HV {:.7f}\n", rep.hv);
    return out;
}

namespace {

// Collects options that override manifest fields only when given.
class Overrides {
public:
    template <typename T>
    CLI::Option* add(CLI::App* app, const std::string& flag, const std::string& desc,
                     std::function<void(RunManifest&, const T&)> apply)
    {
        auto value = std::make_shared<T>();
        auto* opt = app->add_option(flag, *value, desc);
        items_.emplace_back(opt, [value, apply](RunManifest& m) { apply(m, *value); });
        return opt;
    }

    void apply(RunManifest& m) const
    {
        for (const auto& [opt, fn] : items_) {
            if (opt->count() > 0) {
                fn(m);
            }
        }
    }

private:
    std::vector<std::pair<CLI::Option*, std::function<void(RunManifest&)>>> items_;
};

fs::path default_output(const RunManifest& m)
{
    const char* root = std::getenv("PHMOEA_OUTPUT_ROOT");
    const fs::path base = root != nullptr && *root != '\0' ? fs::path(root) : fs::path("runs");
    return base / fmt::format("{}-{}", name(m.problem), name(m.algorithm));
}

bool parse_switch(const std::string& s)
{
    if (s == "on") {
        return true;
    }
    if (s == "off") {
        return false;
    }
    throw UsageError(fmt::format("expected on or off, got '{}'", s));
}

Point parse_ref_point(const std::string& s)
{
    const auto table = parse_csv("r1,r2\n" + s + "\n", "--ref-point");
    if (table.rows.size() != 1) {
        throw UsageError("--ref-point expects r1,r2");
    }
    return {table.rows[0][0], table.rows[0][1]};
}

std::string model_card(const NetworkSpec& spec)
{
    std::string out = fmt::format("{:<16} {:<12} {:>6} {:>6} {:>4} {:>4} {:>5} {:>10}\n", "layer", "op", "in", "out",
                                  "k", "pad", "len", "params");
    for (const auto& l : spec.layers) {
        out += fmt::format("{:<16} {:<12} {:>6} {:>6} {:>4} {:>4} {:>5} {:>10}\n", l.name, l.op, l.in_channels,
                           l.out_channels, l.kernel, l.padding, l.length, l.params);
    }
    out += fmt::format("total trainable parameters: {}\n", count_params(spec));
    return out;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Budgeted bi-objective evolutionary configuration search"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    // search
    auto* search = app.add_subcommand("search", "Run PHMOEA or NSGA-II on a problem");
    std::string manifest_path;
    search->add_option("--manifest", manifest_path, "JSON run manifest; flags override its fields")
        ->check(CLI::ExistingFile);
    std::string problem_flag;
    bool verbose = false;
    search->add_flag("-v,--verbose", verbose, "Log refinement, early stopping and evaluation failures");
    search->add_option("--problem", problem_flag, "hdtlz2, hdtlz7, surrogate or external");
    Overrides ov;
    ov.add<std::string>(search, "--algo", "phmoea or nsga2", [](RunManifest& m, const std::string& v) {
        const auto a = parse_algorithm(v);
        if (!a) {
            throw UsageError(fmt::format("unknown algorithm '{}' (expected phmoea or nsga2)", v));
        }
        m.algorithm = *a;
    });
    ov.add<std::size_t>(search, "--pop", "Population size N",
                        [](RunManifest& m, const std::size_t& v) { m.population = v; });
    ov.add<std::size_t>(search, "--gens", "Generation budget T_max",
                        [](RunManifest& m, const std::size_t& v) { m.generations = v; });
    ov.add<std::uint64_t>(search, "--seed", "First seed", [](RunManifest& m, const std::uint64_t& v) { m.seed = v; });
    ov.add<std::size_t>(search, "--seeds", "Number of consecutive seeds",
                        [](RunManifest& m, const std::size_t& v) { m.seeds = v; });
    ov.add<std::string>(search, "--out", "Output directory",
                        [](RunManifest& m, const std::string& v) { m.output = v; });
    ov.add<std::string>(search, "--early-stop", "on or off",
                        [](RunManifest& m, const std::string& v) { m.early_stopping = parse_switch(v); });
    ov.add<double>(search, "--kappa1", "First stage threshold",
                   [](RunManifest& m, const double& v) { m.stage.kappa1 = v; });
    ov.add<double>(search, "--kappa2", "Second stage threshold",
                   [](RunManifest& m, const double& v) { m.stage.kappa2 = v; });
    ov.add<double>(search, "--lambda", "Crowding weight in the rank score",
                   [](RunManifest& m, const double& v) { m.stage.lambda = v; });
    ov.add<double>(search, "--w", "f1 weight in the objective score",
                   [](RunManifest& m, const double& v) { m.stage.w = v; });
    ov.add<double>(search, "--score-gamma", "Crowding weight in the late-stage score",
                   [](RunManifest& m, const double& v) { m.stage.gamma = v; });
    ov.add<double>(search, "--hot", "Hot share q", [](RunManifest& m, const double& v) { m.stage.q = v; });
    ov.add<double>(search, "--cold", "Cold share p", [](RunManifest& m, const double& v) { m.stage.p = v; });
    ov.add<double>(search, "--cold-bonus", "Cold sampling weight o",
                   [](RunManifest& m, const double& v) { m.stage.o = v; });
    ov.add<double>(search, "--cross-pool", "Cross-pool mutation rate e",
                   [](RunManifest& m, const double& v) { m.stage.e = v; });
    ov.add<std::size_t>(search, "--m-max", "Cap on mutated dimensions",
                        [](RunManifest& m, const std::size_t& v) { m.stage.m_max = v; });
    ov.add<double>(search, "--pc", "Crossover probability", [](RunManifest& m, const double& v) { m.variation.pc = v; });
    ov.add<double>(search, "--pm", "Per-offspring mutation probability",
                   [](RunManifest& m, const double& v) { m.variation.pm = v; });
    ov.add<std::size_t>(search, "--initial-bins", "Initial bins per continuous variable",
                        [](RunManifest& m, const std::size_t& v) { m.refine.initial_bins = v; });
    ov.add<double>(search, "--refine-threshold", "Interval mass that counts toward a split",
                   [](RunManifest& m, const double& v) { m.refine.mass_threshold = v; });
    ov.add<unsigned>(search, "--refine-persistence", "Consecutive generations before a split",
                     [](RunManifest& m, const unsigned& v) { m.refine.persistence = v; });
    ov.add<std::size_t>(search, "--window", "Early-stop window W",
                        [](RunManifest& m, const std::size_t& v) { m.early_stop.window = v; });
    ov.add<std::size_t>(search, "--bench-n", "Benchmark dimension n",
                        [](RunManifest& m, const std::size_t& v) { m.benchmark.n = v; });
    ov.add<std::string>(search, "--topology", "Benchmark coupling topology: chain or tree",
                        [](RunManifest& m, const std::string& v) {
                            const auto t = parse_topology(v);
                            if (!t) {
                                throw UsageError(fmt::format("unknown topology '{}' (expected chain or tree)", v));
                            }
                            m.benchmark.topology = *t;
                        });
    ov.add<double>(search, "--coupling", "Benchmark coupling coefficient",
                   [](RunManifest& m, const double& v) { m.benchmark.gamma = v; });
    ov.add<std::size_t>(search, "--targets", "Forecast targets K", [](RunManifest& m, const std::size_t& v) {
        m.surrogate.targets = v;
        m.external.targets = v;
    });
    ov.add<std::size_t>(search, "--input-channels", "Surrogate input channels",
                        [](RunManifest& m, const std::size_t& v) { m.surrogate.input_channels = v; });
    ov.add<std::string>(search, "--stagnant", "Constant surrogate f1: on or off",
                        [](RunManifest& m, const std::string& v) { m.surrogate.stagnant = parse_switch(v); });
    ov.add<std::string>(search, "--worker-cmd", "External worker command (run through /bin/sh -c)",
                        [](RunManifest& m, const std::string& v) { m.external.command = v; });
    ov.add<std::size_t>(search, "--workers", "External worker processes",
                        [](RunManifest& m, const std::size_t& v) { m.external.workers = v; });
    ov.add<double>(search, "--timeout", "Per-request worker timeout in seconds", [](RunManifest& m, const double& v) {
        if (!(v > 0.0)) {
            throw UsageError("--timeout must be positive");
        }
        m.external.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(v * 1000.0)));
    });

    // indicators
    auto* ind = app.add_subcommand("indicators", "IGD and HV of a front CSV (columns f1, f2)");
    std::string front_path;
    std::string ref_path;
    std::string ref_problem;
    std::string ref_point = "1.1,1.1";
    ind->add_option("--front", front_path, "Front CSV")->required()->check(CLI::ExistingFile);
    auto* ref_opt = ind->add_option("--ref", ref_path, "Reference front CSV")->check(CLI::ExistingFile);
    ind->add_option("--reference-problem", ref_problem, "Use the built-in front of hdtlz2 or hdtlz7")
        ->excludes(ref_opt);
    ind->add_option("--ref-point", ref_point, "HV reference point r1,r2")->capture_default_str();

    // resample
    auto* res = app.add_subcommand("resample", "Align every column of a CSV series to a new length");
    std::string in_path;
    std::string res_out;
    std::string op_name;
    std::string pool_name;
    std::size_t length = 0;
    res->add_option("--in", in_path, "Input CSV, one column per feature")->required()->check(CLI::ExistingFile);
    res->add_option("--out", res_out, "Output CSV")->required();
    res->add_option("--op", op_name, "Resampling operator")->required();
    auto* pool_opt = res->add_option("--pool", pool_name, "Pool type, required with --op pool");
    res->add_option("--length", length, "Aligned length L_p")->required();

    // count-params
    auto* cp = app.add_subcommand("count-params", "Print the model card of a configuration JSON");
    std::string config_path;
    std::size_t c_in = 50;
    std::size_t targets = 5;
    bool as_json = false;
    cp->add_option("--config", config_path, "Configuration JSON {name: value}")->required()->check(CLI::ExistingFile);
    cp->add_option("--input-channels", c_in, "Input channels C_in")->capture_default_str();
    cp->add_option("--targets", targets, "Forecast targets K")->capture_default_str();
    cp->add_flag("--json", as_json, "Emit the network description as JSON");

    // space
    auto* sp = app.add_subcommand("space", "Print a search space as JSON");
    std::string space_problem = "builtin";
    std::size_t space_n = 12;
    sp->add_option("--problem", space_problem, "builtin, hdtlz2 or hdtlz7")->capture_default_str();
    sp->add_option("--bench-n", space_n, "Benchmark dimension n")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (search->parsed()) {
            RunManifest m;
            if (!manifest_path.empty()) {
                Json doc;
                try {
                    doc = Json::parse(read_file(manifest_path));
                } catch (const Json::parse_error& ex) {
                    throw UsageError(fmt::format("{}: {}", manifest_path, ex.what()));
                }
                m = RunManifest::from_json(doc);
                if (!problem_flag.empty() && problem_flag != name(m.problem)) {
                    throw UsageError("--problem disagrees with the manifest");
                }
            } else {
                const auto p = parse_problem(problem_flag.empty() ? "hdtlz2" : problem_flag);
                if (!p) {
                    throw UsageError(fmt::format("unknown problem '{}' (expected hdtlz2, hdtlz7, surrogate or external)",
                                                 problem_flag));
                }
                m = RunManifest::defaults(*p);
            }
            ov.apply(m);
            if (m.output.empty()) {
                m.output = default_output(m);
            }
            m.validate();
            const auto runs = cmd_search(m, err, verbose);
            out << summary_csv(runs);
            return kExitOk;
        }
        if (ind->parsed()) {
            const auto r = parse_ref_point(ref_point);
            std::optional<PointSet> reference;
            if (!ref_path.empty()) {
                reference = read_points(ref_path);
            } else if (!ref_problem.empty()) {
                const auto v = parse_bench_variant(ref_problem);
                if (!v) {
                    throw UsageError(fmt::format("unknown reference problem '{}' (expected hdtlz2 or hdtlz7)",
                                                 ref_problem));
                }
                reference = reference_front(*v, 1000);
            }
            const auto front = read_points(front_path);
            if (front.empty()) {
                throw InputError(fmt::format("{}: front is empty", front_path));
            }
            if (reference && reference->empty()) {
                throw InputError("reference front is empty");
            }
            out << format_indicators(indicators(front, reference, r));
            return kExitOk;
        }
        if (res->parsed()) {
            const auto op = parse_resample_op(op_name);
            if (!op) {
                throw UsageError(fmt::format("unknown operator '{}' (expected one of: {})", op_name,
                                             fmt::join(resample_op_names(), ", ")));
            }
            std::optional<PoolType> pool;
            if (pool_opt->count() > 0) {
                pool = parse_pool_type(pool_name);
                if (!pool) {
                    throw UsageError(fmt::format("unknown pool type '{}' (expected one of: {})", pool_name,
                                                 fmt::join(pool_type_names(), ", ")));
                }
            }
            if (*op == ResampleOp::pool && !pool) {
                throw UsageError("--op pool requires --pool");
            }
            if (*op != ResampleOp::pool && pool) {
                throw UsageError("--pool only applies to --op pool");
            }
            if (length < 2) {
                throw UsageError("--length must be at least 2");
            }
            std::vector<std::string> header;
            const auto x = read_series(in_path, &header);
            write_series(res_out, align(x, length, *op, pool), header);
            return kExitOk;
        }
        if (cp->parsed()) {
            Json config;
            try {
                config = Json::parse(read_file(config_path));
            } catch (const Json::parse_error& ex) {
                throw InputError(fmt::format("{}: {}", config_path, ex.what()));
            }
            NetworkSpec spec;
            try {
                spec = build_graph(config, c_in, targets);
            } catch (const std::invalid_argument& ex) {
                throw InputError(ex.what());
            }
            out << (as_json ? to_json(spec).dump(2) + "\n" : model_card(spec));
            return kExitOk;
        }
        if (sp->parsed()) {
            if (space_problem == "builtin") {
                out << builtin_space().to_json().dump(2) << "\n";
                return kExitOk;
            }
            const auto v = parse_bench_variant(space_problem);
            if (!v) {
                throw UsageError(fmt::format("unknown space '{}' (expected builtin, hdtlz2 or hdtlz7)", space_problem));
            }
            HBenchProblem bp;
            bp.variant = *v;
            bp.n = space_n;
            try {
                out << bench_space(bp).to_json().dump(2) << "\n";
            } catch (const std::invalid_argument& ex) {
                throw UsageError(ex.what());
            }
            return kExitOk;
        }
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const InputError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

} // namespace phmoea
