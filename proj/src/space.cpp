#include "phmoea/space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace phmoea {

std::string VariableSpec::kind_name() const
{
    std::string base = continuous ? "continuous" : "discrete";
    return conditional() ? "conditional-" + base : base;
}

ConfigSpace::ConfigSpace(std::vector<VariableSpec> variables) : variables_(std::move(variables))
{
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        const auto& v = variables_[j];
        if (v.name.empty()) {
            throw std::invalid_argument(fmt::format("variable {} has no name", j + 1));
        }
        for (std::size_t i = 0; i < j; ++i) {
            if (variables_[i].name == v.name) {
                throw std::invalid_argument(fmt::format("duplicate variable name '{}'", v.name));
            }
        }
        if (v.continuous) {
            if (!(std::isfinite(v.lower) && std::isfinite(v.upper) && v.lower < v.upper)) {
                throw std::invalid_argument(fmt::format("variable '{}': range must satisfy a < b", v.name));
            }
            if (v.scale == Scale::log && !(v.lower > 0.0)) {
                throw std::invalid_argument(fmt::format("variable '{}': log scale needs a positive lower bound", v.name));
            }
        } else {
            if (v.candidates.empty()) {
                throw std::invalid_argument(fmt::format("variable '{}': empty candidate set", v.name));
            }
            for (std::size_t a = 0; a < v.candidates.size(); ++a) {
                for (std::size_t b = a + 1; b < v.candidates.size(); ++b) {
                    if (v.candidates[a] == v.candidates[b]) {
                        throw std::invalid_argument(fmt::format("variable '{}': duplicate candidate {}", v.name,
                                                                v.candidates[a].dump()));
                    }
                }
            }
        }
        if (v.parent) {
            const auto p = v.parent->parent;
            if (p >= j) {
                throw std::invalid_argument(fmt::format("variable '{}': parent must precede it", v.name));
            }
            if (variables_[p].continuous) {
                throw std::invalid_argument(fmt::format("variable '{}': parent must be discrete", v.name));
            }
            if (v.parent->activating.empty()) {
                throw std::invalid_argument(fmt::format("variable '{}': empty activating set", v.name));
            }
            for (auto c : v.parent->activating) {
                if (c >= variables_[p].candidates.size()) {
                    throw std::invalid_argument(fmt::format("variable '{}': activating candidate out of range", v.name));
                }
            }
        }
    }
}

std::optional<std::size_t> ConfigSpace::find(std::string_view name) const
{
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (variables_[j].name == name) {
            return j;
        }
    }
    return std::nullopt;
}

std::size_t ConfigSpace::index_of(std::string_view name) const
{
    if (auto j = find(name)) {
        return *j;
    }
    throw std::out_of_range(fmt::format("unknown variable '{}'", name));
}

Json ConfigSpace::to_json() const
{
    Json vars = Json::array();
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        const auto& v = variables_[j];
        Json item;
        item["index"] = j + 1;
        item["name"] = v.name;
        item["label"] = v.label;
        item["kind"] = v.kind_name();
        if (v.continuous) {
            item["range"] = Json::array({v.lower, v.upper});
            item["scale"] = v.scale == Scale::log ? "log" : "linear";
        } else {
            item["candidates"] = Json(v.candidates);
        }
        if (v.parent) {
            const auto& pv = variables_[v.parent->parent];
            Json values = Json::array();
            for (auto c : v.parent->activating) {
                values.push_back(pv.candidates[c]);
            }
            item["parent"] = Json{{"variable", pv.name}, {"values", values}};
        }
        vars.push_back(std::move(item));
    }
    return Json{{"variables", vars}};
}

ConfigSpace ConfigSpace::from_json(const Json& doc)
{
    if (!doc.is_object() || !doc.contains("variables") || !doc["variables"].is_array()) {
        throw std::invalid_argument("space document needs a 'variables' array");
    }
    std::vector<VariableSpec> vars;
    for (const auto& item : doc["variables"]) {
        VariableSpec v;
        v.name = item.at("name").get<std::string>();
        v.label = item.value("label", v.name);
        const auto kind = item.at("kind").get<std::string>();
        const bool conditional = kind.starts_with("conditional-");
        const auto base = conditional ? kind.substr(12) : kind;
        if (base == "continuous") {
            v.continuous = true;
            const auto& range = item.at("range");
            if (!range.is_array() || range.size() != 2) {
                throw std::invalid_argument(fmt::format("variable '{}': range must be [a, b]", v.name));
            }
            v.lower = range[0].get<double>();
            v.upper = range[1].get<double>();
            const auto scale = item.value("scale", std::string("linear"));
            if (scale == "log") {
                v.scale = Scale::log;
            } else if (scale != "linear") {
                throw std::invalid_argument(fmt::format("variable '{}': unknown scale '{}'", v.name, scale));
            }
        } else if (base == "discrete") {
            for (const auto& c : item.at("candidates")) {
                v.candidates.push_back(c);
            }
        } else {
            throw std::invalid_argument(fmt::format("variable '{}': unknown kind '{}'", v.name, kind));
        }
        if (item.contains("parent") != conditional) {
            throw std::invalid_argument(
                fmt::format("variable '{}': conditional kinds need exactly one parent condition", v.name));
        }
        if (conditional) {
            const auto& cond = item.at("parent");
            const auto pname = cond.at("variable").get<std::string>();
            std::optional<std::size_t> p;
            for (std::size_t i = 0; i < vars.size(); ++i) {
                if (vars[i].name == pname) {
                    p = i;
                }
            }
            if (!p) {
                throw std::invalid_argument(
                    fmt::format("variable '{}': parent '{}' must be declared earlier", v.name, pname));
            }
            ParentCondition pc{*p, {}};
            for (const auto& value : cond.at("values")) {
                const auto& cands = vars[*p].candidates;
                auto it = std::find(cands.begin(), cands.end(), value);
                if (it == cands.end()) {
                    throw std::invalid_argument(
                        fmt::format("variable '{}': {} is not a candidate of '{}'", v.name, value.dump(), pname));
                }
                pc.activating.push_back(static_cast<std::size_t>(it - cands.begin()));
            }
            v.parent = std::move(pc);
        }
        vars.push_back(std::move(v));
    }
    return ConfigSpace(std::move(vars));
}

double to_unit(double value, double a, double b, Scale scale)
{
    if (scale == Scale::log) {
        return (std::log(value) - std::log(a)) / (std::log(b) - std::log(a));
    }
    return (value - a) / (b - a);
}

double from_unit(double u, double a, double b, Scale scale)
{
    if (scale == Scale::log) {
        return std::exp((1.0 - u) * std::log(a) + u * std::log(b));
    }
    return a + u * (b - a);
}

double bin_value(double a, double b, std::size_t K, std::size_t k, Scale scale)
{
    if (K == 0 || k < 1 || k > K) {
        throw std::invalid_argument(fmt::format("bin index {} outside 1..{}", k, K));
    }
    if (!(a < b)) {
        throw std::invalid_argument("bin_value: requires a < b");
    }
    if (scale == Scale::log && !(a > 0.0)) {
        throw std::invalid_argument("bin_value: log scale requires a > 0");
    }
    const double alpha = static_cast<double>(2 * k - 1) / static_cast<double>(2 * K);
    if (scale == Scale::log) {
        return std::exp((1.0 - alpha) * std::log(a) + alpha * std::log(b));
    }
    return a + alpha * (b - a);
}

Partition::Partition(double lower, double upper, Scale scale, std::size_t bins)
    : lower_(lower), upper_(upper), scale_(scale), next_id_(bins + 1)
{
    if (bins == 0) {
        throw std::invalid_argument("partition needs at least one bin");
    }
    cuts_.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        cuts_[k] = static_cast<double>(k) / static_cast<double>(bins);
    }
    ids_.resize(bins);
    for (std::size_t k = 0; k < bins; ++k) {
        ids_[k] = k + 1;
    }
    counters_.assign(bins, 0);
}

double Partition::representative(std::size_t bin) const
{
    // Uniform partitions reproduce bin_value exactly.
    return from_unit(representative_unit(bin), lower_, upper_, scale_);
}

std::vector<double> Partition::breakpoints() const
{
    std::vector<double> out(cuts_.size());
    for (std::size_t k = 0; k < cuts_.size(); ++k) {
        out[k] = from_unit(cuts_[k], lower_, upper_, scale_);
    }
    out.front() = lower_;
    out.back() = upper_;
    return out;
}

std::size_t Partition::locate(double value) const
{
    const double u = to_unit(value, lower_, upper_, scale_);
    auto first = cuts_.begin() + 1;
    auto last = cuts_.end() - 1;
    return static_cast<std::size_t>(std::upper_bound(first, last, u) - first);
}

std::size_t Partition::nearest_unit(double u) const
{
    std::size_t lo = 0;
    std::size_t hi = bins();
    // First representative >= u.
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (representative_unit(mid) < u) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if (lo == bins()) {
        return bins() - 1;
    }
    if (lo == 0) {
        return 0;
    }
    const double below = u - representative_unit(lo - 1);
    const double above = representative_unit(lo) - u;
    return above < below ? lo : lo - 1;
}

RefinementState::RefinementState(const ConfigSpace& space, RefineSettings settings) : settings_(settings)
{
    if (settings_.initial_bins == 0) {
        throw std::invalid_argument("initial bin count must be positive");
    }
    parts_.resize(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        const auto& v = space[j];
        if (v.continuous) {
            parts_[j].emplace(v.lower, v.upper, v.scale, settings_.initial_bins);
        }
    }
}

std::vector<double> RefinementState::masses(std::size_t j, std::span<const DecodedConfig> front) const
{
    const auto& part = *parts_[j];
    std::vector<double> mass(part.bins(), 0.0);
    if (front.empty()) {
        return mass;
    }
    for (const auto& d : front) {
        if (d.active(j)) {
            mass[part.locate(d.values[j]->real)] += 1.0;
        }
    }
    for (auto& m : mass) {
        m /= static_cast<double>(front.size());
    }
    return mass;
}

void RefinementState::update(std::span<const DecodedConfig> front)
{
    if (front.empty()) {
        return;
    }
    for (std::size_t j = 0; j < parts_.size(); ++j) {
        if (!parts_[j]) {
            continue;
        }
        const auto mass = masses(j, front);
        auto& counters = parts_[j]->counters_;
        for (std::size_t k = 0; k < mass.size(); ++k) {
            counters[k] = mass[k] > settings_.mass_threshold ? counters[k] + 1 : 0;
        }
    }
}

std::vector<SplitEvent> RefinementState::apply()
{
    std::vector<SplitEvent> events;
    for (std::size_t j = 0; j < parts_.size(); ++j) {
        if (!parts_[j]) {
            continue;
        }
        auto& part = *parts_[j];
        std::vector<double> cuts{part.cuts_.front()};
        std::vector<std::uint64_t> ids;
        std::vector<unsigned> counters;
        for (std::size_t k = 0; k < part.bins(); ++k) {
            const double lo = part.cuts_[k];
            const double hi = part.cuts_[k + 1];
            const bool triggered = part.counters_[k] >= settings_.persistence;
            if (triggered && hi - lo >= 2.0 * settings_.min_unit_width) {
                const SplitEvent ev{j, k, part.ids_[k], part.next_id_, part.next_id_ + 1};
                part.next_id_ += 2;
                cuts.push_back(0.5 * (lo + hi));
                cuts.push_back(hi);
                ids.push_back(ev.left_id);
                ids.push_back(ev.right_id);
                counters.push_back(0);
                counters.push_back(0);
                events.push_back(ev);
            } else {
                cuts.push_back(hi);
                ids.push_back(part.ids_[k]);
                counters.push_back(triggered ? 0 : part.counters_[k]);
            }
        }
        part.cuts_ = std::move(cuts);
        part.ids_ = std::move(ids);
        part.counters_ = std::move(counters);
    }
    return events;
}

std::size_t choice_count(const ConfigSpace& space, const RefinementState& refine, std::size_t j)
{
    if (space[j].continuous) {
        return refine.partition(j).bins();
    }
    return space[j].candidates.size();
}

std::vector<bool> activity(const Genotype& g, const ConfigSpace& space)
{
    std::vector<bool> active(space.size(), true);
    for (std::size_t j = 0; j < space.size(); ++j) {
        const auto& parent = space[j].parent;
        if (!parent) {
            continue;
        }
        const auto p = parent->parent;
        const auto& acts = parent->activating;
        active[j] = active[p] && std::find(acts.begin(), acts.end(), g.genes[p]) != acts.end();
    }
    return active;
}

DecodedConfig decode(const Genotype& g, const ConfigSpace& space, const RefinementState& refine)
{
    const auto active = activity(g, space);
    DecodedConfig d;
    d.values.resize(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (!active[j]) {
            continue;
        }
        const auto gene = g.genes[j];
        if (space[j].continuous) {
            const auto& part = refine.partition(j);
            d.values[j] = ActiveValue{gene, part.id(gene), part.representative(gene)};
        } else {
            d.values[j] = ActiveValue{gene, gene, 0.0};
        }
    }
    return d;
}

Genotype repair(Genotype g, const ConfigSpace& space, const RefinementState& refine)
{
    const auto dims = space.size();
    g.genes.resize(dims, 0);
    g.frozen.resize(dims, 0);
    for (std::size_t j = 0; j < dims; ++j) {
        const auto n = choice_count(space, refine, j);
        g.genes[j] = std::min(g.genes[j], n - 1);
        g.frozen[j] = std::min(g.frozen[j], n - 1);
    }
    // Parents precede children, so activity can be settled in one pass.
    const auto active = activity(g, space);
    for (std::size_t j = 0; j < dims; ++j) {
        if (active[j]) {
            g.frozen[j] = g.genes[j];
        } else {
            g.genes[j] = g.frozen[j];
        }
    }
    return g;
}

Genotype sample_random(const ConfigSpace& space, const RefinementState& refine, Rng& rng)
{
    Genotype g(space.size());
    for (std::size_t j = 0; j < space.size(); ++j) {
        g.genes[j] = rng.index(choice_count(space, refine, j));
    }
    return repair(std::move(g), space, refine);
}

Genotype remap(const Genotype& g, const ConfigSpace& space, const RefinementState& before,
               const RefinementState& after)
{
    Genotype out = g;
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (!space[j].continuous) {
            continue;
        }
        const auto& old_part = before.partition(j);
        const auto& new_part = after.partition(j);
        out.genes[j] = new_part.nearest_unit(old_part.representative_unit(g.genes[j]));
        out.frozen[j] = new_part.nearest_unit(old_part.representative_unit(g.frozen[j]));
    }
    return out;
}

Json to_json(const DecodedConfig& d, const ConfigSpace& space)
{
    Json out = Json::object();
    for (std::size_t j = 0; j < space.size(); ++j) {
        if (!d.active(j)) {
            continue;
        }
        if (space[j].continuous) {
            out[space[j].name] = d.values[j]->real;
        } else {
            out[space[j].name] = space[j].candidates[d.values[j]->choice];
        }
    }
    return out;
}

const Json& candidate(const DecodedConfig& d, const ConfigSpace& space, std::size_t j)
{
    if (!d.active(j)) {
        throw std::logic_error(fmt::format("variable '{}' is inactive", space[j].name));
    }
    if (space[j].continuous) {
        throw std::logic_error(fmt::format("variable '{}' is continuous", space[j].name));
    }
    return space[j].candidates[d.values[j]->choice];
}

std::string canonical_form(const DecodedConfig& d)
{
    std::string out;
    for (std::size_t j = 0; j < d.size(); ++j) {
        if (d.active(j)) {
            out += fmt::format("{}={};", j + 1, d.values[j]->canonical);
        }
    }
    return out;
}

std::uint64_t canonical_key(const DecodedConfig& d)
{
    // FNV-1a over the serialized canonical form.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_form(d)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string format_key(std::uint64_t key) { return fmt::format("{:016x}", key); }

} // namespace phmoea
