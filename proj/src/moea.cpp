#include "phmoea/moea.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <unordered_set>

#include <fmt/format.h>

namespace phmoea {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void minmax_normalize(Population& pop, double Individual::*src, double Individual::*dst, double eps)
{
    double lo = kInf;
    double hi = -kInf;
    for (const auto& ind : pop) {
        const double v = ind.*src;
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    for (auto& ind : pop) {
        const double v = ind.*src;
        ind.*dst = std::isfinite(v) ? (v - lo) / (hi - lo + eps) : 1.0;
    }
}

} // namespace

void normalize_generation(Population& pop, double eps)
{
    minmax_normalize(pop, &Individual::f1, &Individual::n1, eps);
    minmax_normalize(pop, &Individual::f2, &Individual::n2, eps);
    minmax_normalize(pop, &Individual::crowding, &Individual::ncrowd, eps);
}

std::vector<std::size_t> nd_ranks(std::span<const Point> points)
{
    const auto n = points.size();
    std::vector<std::size_t> rank(n, 0);
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> dominators(n, 0);
    std::vector<std::size_t> front;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            if (dominates(points[i], points[k])) {
                dominated[i].push_back(k);
                ++dominators[k];
            } else if (dominates(points[k], points[i])) {
                dominated[k].push_back(i);
                ++dominators[i];
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (dominators[i] == 0) {
            front.push_back(i);
        }
    }
    std::size_t level = 0;
    while (!front.empty()) {
        std::vector<std::size_t> next;
        for (auto i : front) {
            rank[i] = level;
            for (auto k : dominated[i]) {
                if (--dominators[k] == 0) {
                    next.push_back(k);
                }
            }
        }
        std::sort(next.begin(), next.end());
        front = std::move(next);
        ++level;
    }
    return rank;
}

std::vector<double> crowding_distances(std::span<const Point> points, std::span<const std::size_t> ranks)
{
    const auto n = points.size();
    std::vector<double> crowd(n, 0.0);
    if (n == 0) {
        return crowd;
    }
    const auto levels = *std::max_element(ranks.begin(), ranks.end()) + 1;
    std::vector<std::vector<std::size_t>> fronts(levels);
    for (std::size_t i = 0; i < n; ++i) {
        fronts[ranks[i]].push_back(i);
    }
    for (auto& members : fronts) {
        if (members.size() <= 2) {
            for (auto i : members) {
                crowd[i] = kInf;
            }
            continue;
        }
        for (double Point::*obj : {&Point::f1, &Point::f2}) {
            std::stable_sort(members.begin(), members.end(),
                             [&](std::size_t a, std::size_t b) { return points[a].*obj < points[b].*obj; });
            const double lo = points[members.front()].*obj;
            const double hi = points[members.back()].*obj;
            crowd[members.front()] = kInf;
            crowd[members.back()] = kInf;
            if (!(hi > lo)) {
                continue;
            }
            for (std::size_t m = 1; m + 1 < members.size(); ++m) {
                crowd[members[m]] += (points[members[m + 1]].*obj - points[members[m - 1]].*obj) / (hi - lo);
            }
        }
    }
    return crowd;
}

void nd_sort_and_crowd(Population& pop)
{
    const auto points = front_points(pop);
    const auto ranks = nd_ranks(points);
    const auto crowd = crowding_distances(points, ranks);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        pop[i].rank = ranks[i];
        pop[i].crowding = crowd[i];
    }
}

StageParams StageParams::benchmark()
{
    StageParams p;
    p.kappa1 = 0.2;
    p.kappa2 = 0.4;
    p.w = 0.5;
    return p;
}

void StageParams::validate() const
{
    if (!(0.0 <= kappa1 && kappa1 < kappa2 && kappa2 <= 1.0)) {
        throw std::invalid_argument(fmt::format("stage thresholds must satisfy 0 <= k1 < k2 <= 1 (got {}, {})",
                                                kappa1, kappa2));
    }
    for (const auto& r : ratios) {
        if (r.parent < 0.0 || r.hot < 0.0 || r.nonhot < 0.0 || std::abs(r.parent + r.hot + r.nonhot - 1.0) > 1e-9) {
            throw std::invalid_argument("each stage ratio triple must be non-negative and sum to 1");
        }
    }
    if (!(o > 0.0)) {
        throw std::invalid_argument("cold bonus must be positive");
    }
    if (!(0.0 <= e && e <= 1.0) || !(0.0 <= q && q <= 1.0) || !(0.0 <= p && p <= 1.0)) {
        throw std::invalid_argument("q, p and e must lie in [0, 1]");
    }
    if (!(0.0 <= w && w <= 1.0) || lambda < 0.0 || gamma < 0.0) {
        throw std::invalid_argument("score weights out of range");
    }
}

std::size_t StageParams::stage(double phi) const
{
    if (phi < kappa1) {
        return 0;
    }
    return phi < kappa2 ? 1 : 2;
}

double stage_score(const Individual& ind, double phi, const StageParams& params)
{
    const double s = 1.0 / (1.0 + static_cast<double>(ind.rank)) + params.lambda * ind.ncrowd;
    const double g = params.w * ind.n1 + (1.0 - params.w) * ind.n2;
    switch (params.stage(phi)) {
    case 0:
        return s;
    case 1: {
        const double a = params.alpha(phi);
        return a * s + (1.0 - a) * g;
    }
    default:
        return g + params.gamma * ind.ncrowd;
    }
}

void compute_scores(Population& pop, double phi, const StageParams& params)
{
    double total = 0.0;
    for (auto& ind : pop) {
        ind.score = stage_score(ind, phi, params);
        total += ind.score;
    }
    for (auto& ind : pop) {
        ind.weight = total > 0.0 ? ind.score / total : 1.0 / static_cast<double>(pop.size());
    }
}

std::uint64_t player_id(std::size_t j, std::size_t choice, const ConfigSpace& space, const RefinementState& refine)
{
    return space[j].continuous ? refine.partition(j).id(choice) : choice;
}

void PlayerArchives::update(const Population& pop, const ConfigSpace& space, const RefinementState& refine)
{
    for (const auto& ind : pop) {
        const auto active = activity(ind.genotype, space);
        for (std::size_t j = 0; j < space.size(); ++j) {
            if (!active[j]) {
                continue;
            }
            auto& entry = dims_[j][player_id(j, ind.genotype.genes[j], space, refine)];
            entry.heat += ind.weight;
            entry.count += 1;
        }
    }
}

void PlayerArchives::split(const SplitEvent& event)
{
    auto& players = dims_[event.dim];
    const auto it = players.find(event.parent_id);
    if (it == players.end()) {
        return;
    }
    const auto stats = it->second;
    players.erase(it);
    players[event.left_id] = stats;
    players[event.right_id] = stats;
}

PlayerStats PlayerArchives::at(std::size_t j, std::uint64_t player) const
{
    const auto it = dims_[j].find(player);
    return it == dims_[j].end() ? PlayerStats{} : it->second;
}

std::vector<PlayerStats> PlayerArchives::stats(std::size_t j, const ConfigSpace& space,
                                               const RefinementState& refine) const
{
    const auto n = choice_count(space, refine, j);
    std::vector<PlayerStats> out(n);
    for (std::size_t c = 0; c < n; ++c) {
        out[c] = at(j, player_id(j, c, space, refine));
    }
    return out;
}

PlayerPartition partition_players(std::span<const PlayerStats> stats, double q, double p)
{
    const auto n = stats.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return stats[a].heat > stats[b].heat; });
    const auto n_hot = std::min(n, static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) - 1e-12)));
    PlayerPartition part;
    part.hot.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hot));

    std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(n_hot), order.end());
    std::sort(rest.begin(), rest.end());
    std::stable_sort(rest.begin(), rest.end(),
                     [&](std::size_t a, std::size_t b) { return stats[a].count < stats[b].count; });
    const auto n_cold =
        std::min(rest.size(), static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-12)));
    part.cold.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_cold));
    part.normal.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_cold), rest.end());
    std::sort(part.hot.begin(), part.hot.end());
    std::sort(part.cold.begin(), part.cold.end());
    std::sort(part.normal.begin(), part.normal.end());
    return part;
}

std::size_t sample_candidate(const PlayerPartition& part, Pool pool, double o, std::size_t n, Rng& rng)
{
    if (pool == Pool::hot) {
        if (part.hot.empty()) {
            return rng.index(n);
        }
        return part.hot[rng.index(part.hot.size())];
    }
    const auto size = part.normal.size() + part.cold.size();
    if (size == 0) {
        return rng.index(n);
    }
    // Pool members in ascending choice order, each with its weight.
    std::vector<std::size_t> members;
    std::vector<double> eta;
    members.reserve(size);
    eta.reserve(size);
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < part.normal.size() || b < part.cold.size()) {
        if (b == part.cold.size() || (a < part.normal.size() && part.normal[a] < part.cold[b])) {
            members.push_back(part.normal[a++]);
            eta.push_back(1.0);
        } else {
            members.push_back(part.cold[b++]);
            eta.push_back(o);
        }
    }
    return members[rng.weighted(eta)];
}

std::pair<double, double> sbx_pair(double x1, double x2, double eta, Rng& rng)
{
    if (std::abs(x1 - x2) <= 1e-14) {
        return {x1, x2};
    }
    const double y1 = std::min(x1, x2);
    const double y2 = std::max(x1, x2);
    const double u = rng.uniform();
    auto betaq = [&](double beta) {
        const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
        return u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
    };
    const double spread = y2 - y1;
    double c1 = 0.5 * ((y1 + y2) - betaq(1.0 + 2.0 * y1 / spread) * spread);
    double c2 = 0.5 * ((y1 + y2) + betaq(1.0 + 2.0 * (1.0 - y2) / spread) * spread);
    c1 = std::clamp(c1, 0.0, 1.0);
    c2 = std::clamp(c2, 0.0, 1.0);
    if (rng.bernoulli(0.5)) {
        std::swap(c1, c2);
    }
    return {c1, c2};
}

double polynomial_mutation(double x, double eta, Rng& rng)
{
    const double u = rng.uniform();
    const double power = 1.0 / (eta + 1.0);
    double dq = 0.0;
    if (u < 0.5) {
        const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - x, eta + 1.0);
        dq = std::pow(v, power) - 1.0;
    } else {
        const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(x, eta + 1.0);
        dq = 1.0 - std::pow(v, power);
    }
    return std::clamp(x + dq, 0.0, 1.0);
}

std::pair<Genotype, Genotype> crossover(const Genotype& a, const Genotype& b, const ConfigSpace& space,
                                        const RefinementState& refine, const VariationParams& params, Rng& rng)
{
    Genotype c1 = a;
    Genotype c2 = b;
    if (!rng.bernoulli(params.pc)) {
        return {c1, c2};
    }
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (!space[j].continuous) {
            if (rng.bernoulli(0.5)) {
                std::swap(c1.genes[j], c2.genes[j]);
            }
            continue;
        }
        if (!rng.bernoulli(0.5)) {
            continue;
        }
        const auto& part = refine.partition(j);
        const auto [u1, u2] = sbx_pair(part.representative_unit(a.genes[j]), part.representative_unit(b.genes[j]),
                                       params.eta_c, rng);
        c1.genes[j] = part.nearest_unit(u1);
        c2.genes[j] = part.nearest_unit(u2);
    }
    return {c1, c2};
}

std::size_t mutate(Genotype& g, const ConfigSpace& space, const RefinementState& refine,
                   const VariationParams& params, std::size_t m_max, Rng& rng)
{
    if (!rng.bernoulli(params.pm)) {
        return 0;
    }
    const auto dims = space.size();
    std::vector<std::size_t> chosen;
    for (std::size_t j = 0; j < dims; ++j) {
        if (rng.bernoulli(1.0 / static_cast<double>(dims))) {
            chosen.push_back(j);
        }
    }
    const auto cap = std::min(m_max, dims);
    if (chosen.size() > cap) {
        rng.shuffle(std::span<std::size_t>(chosen));
        chosen.resize(cap);
        std::sort(chosen.begin(), chosen.end());
    }
    std::size_t changed = 0;
    for (auto j : chosen) {
        const auto before = g.genes[j];
        const auto n = choice_count(space, refine, j);
        if (space[j].continuous) {
            const auto& part = refine.partition(j);
            g.genes[j] = part.nearest_unit(polynomial_mutation(part.representative_unit(before), params.eta_m, rng));
        } else if (n > 1) {
            const auto draw = rng.index(n - 1);
            g.genes[j] = draw >= before ? draw + 1 : draw;
        }
        changed += g.genes[j] != before ? 1 : 0;
    }
    return changed;
}

std::size_t tournament(const Population& pop, Rng& rng)
{
    const auto a = rng.index(pop.size());
    const auto b = rng.index(pop.size());
    const auto& x = pop[a];
    const auto& y = pop[b];
    if (x.rank != y.rank) {
        return x.rank < y.rank ? a : b;
    }
    if (x.crowding != y.crowding) {
        return x.crowding > y.crowding ? a : b;
    }
    return std::min(a, b);
}

std::optional<Candidate> admit(Genotype g, const ConfigSpace& space, const RefinementState& refine,
                               DedupRegistry& registry)
{
    Candidate c;
    c.genotype = repair(std::move(g), space, refine);
    c.config = decode(c.genotype, space, refine);
    c.key = canonical_key(c.config);
    if (registry.admit(c.key) == Admission::duplicate) {
        return std::nullopt;
    }
    return c;
}

std::vector<Candidate> variation_sbx_pm(const Population& parents, std::size_t n, const VariationParams& params,
                                        std::size_t m_max, OffspringContext ctx)
{
    if (parents.size() < 2) {
        throw std::invalid_argument("variation needs at least two parents");
    }
    std::vector<Candidate> out;
    std::vector<Genotype> queue;
    for (std::size_t slot = 0; slot < n; ++slot) {
        for (std::size_t trial = 0; trial < ctx.registry.trials(); ++trial) {
            if (queue.empty()) {
                const auto& a = parents[tournament(parents, ctx.rng)];
                const auto& b = parents[tournament(parents, ctx.rng)];
                auto [c1, c2] = crossover(a.genotype, b.genotype, ctx.space, ctx.refine, params, ctx.rng);
                mutate(c1, ctx.space, ctx.refine, params, m_max, ctx.rng);
                mutate(c2, ctx.space, ctx.refine, params, m_max, ctx.rng);
                queue.push_back(std::move(c2));
                queue.push_back(std::move(c1));
            }
            auto g = std::move(queue.back());
            queue.pop_back();
            if (auto c = admit(std::move(g), ctx.space, ctx.refine, ctx.registry)) {
                out.push_back(std::move(*c));
                break;
            }
        }
    }
    return out;
}

std::vector<Candidate> assemble(std::span<const PlayerPartition> partitions, Pool pool, std::size_t n,
                                const StageParams& params, OffspringContext ctx)
{
    const auto dims = ctx.space.size();
    const auto other = pool == Pool::hot ? Pool::nonhot : Pool::hot;
    const auto cap = std::min(params.m_max, dims);
    std::vector<Candidate> out;
    for (std::size_t slot = 0; slot < n; ++slot) {
        for (std::size_t trial = 0; trial < ctx.registry.trials(); ++trial) {
            Genotype g(dims);
            for (std::size_t j = 0; j < dims; ++j) {
                g.genes[j] = sample_candidate(partitions[j], pool, params.o,
                                              choice_count(ctx.space, ctx.refine, j), ctx.rng);
            }
            std::vector<std::size_t> flips;
            for (std::size_t j = 0; j < dims; ++j) {
                if (ctx.rng.bernoulli(params.e)) {
                    flips.push_back(j);
                }
            }
            if (flips.size() > cap) {
                ctx.rng.shuffle(std::span<std::size_t>(flips));
                flips.resize(cap);
                std::sort(flips.begin(), flips.end());
            }
            for (auto j : flips) {
                g.genes[j] = sample_candidate(partitions[j], other, params.o,
                                              choice_count(ctx.space, ctx.refine, j), ctx.rng);
            }
            g.frozen = g.genes;
            if (auto c = admit(std::move(g), ctx.space, ctx.refine, ctx.registry)) {
                out.push_back(std::move(*c));
                break;
            }
        }
    }
    return out;
}

OffspringCounts offspring_counts(std::size_t n, const StageRatios& ratios)
{
    OffspringCounts c;
    const auto nd = static_cast<double>(n);
    c.parent = static_cast<std::size_t>(std::floor(ratios.parent * nd + 1e-9));
    c.hot = static_cast<std::size_t>(std::floor(ratios.hot * nd + 1e-9));
    c.parent = std::min(c.parent, n);
    c.hot = std::min(c.hot, n - c.parent);
    c.nonhot = n - c.parent - c.hot;
    return c;
}

std::vector<Candidate> generate_offspring(Population& pop, std::size_t n, PlayerArchives& archives, double phi,
                                          const StageParams& params, const VariationParams& variation,
                                          OffspringContext ctx)
{
    nd_sort_and_crowd(pop);
    normalize_generation(pop);
    compute_scores(pop, phi, params);
    archives.update(pop, ctx.space, ctx.refine);

    std::vector<PlayerPartition> partitions;
    partitions.reserve(ctx.space.size());
    for (std::size_t j = 0; j < ctx.space.size(); ++j) {
        const auto stats = archives.stats(j, ctx.space, ctx.refine);
        partitions.push_back(partition_players(stats, params.q, params.p));
    }

    const auto counts = offspring_counts(n, params.ratios_at(phi));
    const auto m_max = std::min(params.m_max, ctx.space.size());
    auto out = variation_sbx_pm(pop, counts.parent, variation, m_max, ctx);
    for (auto& c : assemble(partitions, Pool::hot, counts.hot, params, ctx)) {
        out.push_back(std::move(c));
    }
    for (auto& c : assemble(partitions, Pool::nonhot, counts.nonhot, params, ctx)) {
        out.push_back(std::move(c));
    }
    return out;
}

Population environmental_select(Population pop, std::size_t n)
{
    nd_sort_and_crowd(pop);
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pop[a].rank != pop[b].rank) {
            return pop[a].rank < pop[b].rank;
        }
        return pop[a].crowding > pop[b].crowding;
    });
    order.resize(std::min(n, order.size()));
    Population out;
    out.reserve(order.size());
    for (auto i : order) {
        out.push_back(std::move(pop[i]));
    }
    return out;
}

double relative_improvement(double before, double after, double eps0)
{
    return std::max(0.0, before - after) / std::max(std::abs(before), eps0);
}

double relative_gain(double before, double after, double eps0)
{
    return std::max(0.0, after - before) / std::max(std::abs(before), eps0);
}

void EarlyStopState::set_reference(const Population& initial)
{
    if (reference_ || initial.empty()) {
        return;
    }
    Point r{-kInf, -kInf};
    for (const auto& ind : initial) {
        r.f1 = std::max(r.f1, ind.f1);
        r.f2 = std::max(r.f2, ind.f2);
    }
    reference_ = Point{1.1 * r.f1, 1.1 * r.f2};
}

void EarlyStopState::record(double mean_f1, double mean_f2, double hv)
{
    f1_.push_back(mean_f1);
    f2_.push_back(mean_f2);
    hv_.push_back(hv);
}

namespace {

Point front_means(const Population& front)
{
    Point m;
    for (const auto& ind : front) {
        m.f1 += ind.f1;
        m.f2 += ind.f2;
    }
    const auto k = static_cast<double>(std::max<std::size_t>(front.size(), 1));
    return {m.f1 / k, m.f2 / k};
}

} // namespace

void EarlyStopState::record(const Population& pop)
{
    if (!reference_) {
        throw std::logic_error("early-stop reference point is not set");
    }
    const auto front = pareto_members(pop);
    const auto means = front_means(front);
    record(means.f1, means.f2, hv(front_points(front), *reference_));
}

std::optional<EarlyStopState::Deltas> EarlyStopState::deltas() const
{
    const auto w = settings_.window;
    if (w == 0 || f1_.size() <= w) {
        return std::nullopt;
    }
    const auto t = f1_.size() - 1;
    return Deltas{relative_improvement(f1_[t - w], f1_[t], settings_.eps0),
                  relative_improvement(f2_[t - w], f2_[t], settings_.eps0),
                  relative_gain(hv_[t - w], hv_[t], settings_.eps0)};
}

bool EarlyStopState::should_stop() const
{
    const auto d = deltas();
    return d && d->f1 < settings_.eps_f1 && d->f2 < settings_.eps_f2 && d->hv < settings_.eps_hv;
}

Population pareto_members(const Population& pop)
{
    const auto ranks = nd_ranks(front_points(pop));
    Population out;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (ranks[i] == 0) {
            out.push_back(pop[i]);
        }
    }
    std::sort(out.begin(), out.end(), [](const Individual& a, const Individual& b) {
        return std::tie(a.f1, a.f2, a.key) < std::tie(b.f1, b.f2, b.key);
    });
    return out;
}

PointSet front_points(const Population& pop)
{
    PointSet pts;
    pts.reserve(pop.size());
    for (const auto& ind : pop) {
        pts.push_back(ind.objectives());
    }
    return pts;
}

std::string_view name(Algorithm a) { return a == Algorithm::phmoea ? "phmoea" : "nsga2"; }

std::optional<Algorithm> parse_algorithm(std::string_view s)
{
    if (s == "phmoea") {
        return Algorithm::phmoea;
    }
    if (s == "nsga2") {
        return Algorithm::nsga2;
    }
    return std::nullopt;
}

std::vector<Evaluation> evaluate_batch(Evaluator& evaluator, std::span<const Candidate> batch)
{
    std::vector<Evaluation> results(batch.size());
    const auto workers = std::min(evaluator.concurrency(), batch.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < batch.size(); ++i) {
            results[i] = evaluator(batch[i].config, batch[i].key);
        }
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (auto i = next++; i < batch.size(); i = next++) {
            results[i] = evaluator(batch[i].config, batch[i].key);
        }
    };
    std::vector<std::jthread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        threads.emplace_back(work);
    }
    threads.clear();
    return results;
}

namespace {

class Search {
public:
    Search(Algorithm algorithm, const SearchProblem& problem, const RunOptions& options)
        : algorithm_(algorithm),
          problem_(problem),
          options_(options),
          space_(problem.evaluator->space()),
          rng_(options.seed),
          registry_(options.dedup_trials),
          archives_(space_.size()),
          early_(options.early_stop)
    {
        result_.refine = RefinementState(space_, options.refine);
    }

    RunResult run()
    {
        const auto n = options_.population;
        const auto t_max = options_.generations;

        std::vector<Candidate> initial;
        for (std::size_t slot = 0; slot < n; ++slot) {
            for (std::size_t trial = 0; trial < registry_.trials(); ++trial) {
                if (auto c = admit(sample_random(space_, result_.refine, rng_), space_, result_.refine, registry_)) {
                    initial.push_back(std::move(*c));
                    break;
                }
            }
        }
        Population pop = evaluate(initial);
        if (pop.empty()) {
            throw std::runtime_error("every candidate of the initial population failed to evaluate");
        }
        early_.set_reference(pop);
        result_.early_stop_reference = early_.reference();
        record(pop, 1);

        // P_0 counts as the first of t_max generations, which keeps the
        // evaluation budget at N * t_max.
        for (std::size_t t = 0; t + 1 < t_max; ++t) {
            if (options_.early_stopping && early_.should_stop()) {
                result_.stopped_early = true;
                log(fmt::format("early stop before round {} after {} evaluations", t, result_.fes));
                break;
            }
            const double phi = static_cast<double>(t) / static_cast<double>(t_max);
            if (options_.refinement) {
                refine(pop);
            }
            OffspringContext ctx{space_, result_.refine, registry_, rng_};
            std::vector<Candidate> offspring;
            if (algorithm_ == Algorithm::phmoea) {
                offspring = generate_offspring(pop, n, archives_, phi, options_.stage, options_.variation, ctx);
            } else {
                nd_sort_and_crowd(pop);
                offspring = variation_sbx_pm(pop, n, options_.variation, std::min(options_.stage.m_max, space_.size()),
                                             ctx);
            }
            auto evaluated = evaluate(offspring);
            for (auto& ind : evaluated) {
                pop.push_back(std::move(ind));
            }
            pop = environmental_select(std::move(pop), n);
            record(pop, t + 2);
        }

        nd_sort_and_crowd(pop);
        result_.pareto = pareto_members(pop);
        result_.population = std::move(pop);
        return std::move(result_);
    }

private:
    void log(const std::string& msg) const
    {
        if (options_.log) {
            options_.log(msg);
        }
    }

    Population evaluate(const std::vector<Candidate>& batch)
    {
        const auto results = evaluate_batch(*problem_.evaluator, batch);
        Population out;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            ++result_.fes;
            if (options_.check_unique_keys && !seen_.insert(batch[i].key).second) {
                throw std::logic_error(fmt::format("key {} evaluated twice", format_key(batch[i].key)));
            }
            result_.evaluated_keys.push_back(batch[i].key);
            const auto& e = results[i];
            if (!e.ok()) {
                ++result_.failures;
                log(fmt::format("evaluation of {} failed: {}", format_key(batch[i].key), e.message));
                continue;
            }
            Individual ind;
            ind.genotype = batch[i].genotype;
            ind.config = batch[i].config;
            ind.key = batch[i].key;
            ind.f1 = e.f1;
            ind.f2 = e.f2;
            out.push_back(std::move(ind));
        }
        return out;
    }

    void refine(Population& pop)
    {
        const auto front = pareto_members(pop);
        std::vector<DecodedConfig> configs;
        configs.reserve(front.size());
        for (const auto& ind : front) {
            configs.push_back(ind.config);
        }
        const auto before = result_.refine;
        result_.refine.update(configs);
        const auto events = result_.refine.apply();
        if (events.empty()) {
            return;
        }
        for (const auto& ev : events) {
            archives_.split(ev);
            result_.splits.push_back(ev);
        }
        for (auto& ind : pop) {
            ind.genotype = remap(ind.genotype, space_, before, result_.refine);
        }
        log(fmt::format("refined {} interval(s)", events.size()));
    }

    void record(const Population& pop, std::size_t gen)
    {
        const auto front = pareto_members(pop);
        const auto points = front_points(front);
        GenerationRecord rec;
        rec.gen = gen;
        rec.fes = result_.fes;
        const auto means = front_means(front);
        rec.mean_f1 = means.f1;
        rec.mean_f2 = means.f2;
        rec.hv = hv(points, problem_.hv_reference.value_or(*early_.reference()));
        if (problem_.reference_front) {
            rec.igd = igd(points, *problem_.reference_front);
        }
        early_.record(means.f1, means.f2, hv(points, *early_.reference()));
        result_.history.push_back(rec);
    }

    Algorithm algorithm_;
    const SearchProblem& problem_;
    const RunOptions& options_;
    const ConfigSpace& space_;
    Rng rng_;
    DedupRegistry registry_;
    PlayerArchives archives_;
    EarlyStopState early_;
    RunResult result_;
    std::unordered_set<std::uint64_t> seen_;
};

} // namespace

RunResult run_search(Algorithm algorithm, const SearchProblem& problem, const RunOptions& options)
{
    if (problem.evaluator == nullptr) {
        throw std::invalid_argument("search problem has no evaluator");
    }
    if (options.population < 2) {
        throw std::invalid_argument("population size must be at least 2");
    }
    if (options.generations < 1) {
        throw std::invalid_argument("generation budget must be at least 1");
    }
    options.stage.validate();
    return Search(algorithm, problem, options).run();
}

} // namespace phmoea
