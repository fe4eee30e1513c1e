#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "phmoea/rng.hpp"

namespace phmoea {

using Json = nlohmann::ordered_json;

enum class Scale { linear, log };

// A discrete parent dimension and the candidate indices that switch a child on.
struct ParentCondition {
    std::size_t parent = 0;
    std::vector<std::size_t> activating;
};

struct VariableSpec {
    std::string name;
    std::string label;
    bool continuous = false;
    std::vector<Json> candidates; // discrete dimensions
    double lower = 0.0;           // continuous dimensions
    double upper = 1.0;
    Scale scale = Scale::linear;
    std::optional<ParentCondition> parent;

    bool conditional() const { return parent.has_value(); }
    std::string kind_name() const;
};

// Ordered, validated list of variables. Conditional variables may only point
// at earlier discrete variables, so index order is a topological order.
class ConfigSpace {
public:
    ConfigSpace() = default;
    explicit ConfigSpace(std::vector<VariableSpec> variables);

    std::size_t size() const { return variables_.size(); }
    const VariableSpec& operator[](std::size_t j) const { return variables_[j]; }
    std::span<const VariableSpec> variables() const { return variables_; }

    std::optional<std::size_t> find(std::string_view name) const;
    std::size_t index_of(std::string_view name) const;

    Json to_json() const;
    static ConfigSpace from_json(const Json& doc);

private:
    std::vector<VariableSpec> variables_;
};

// The 24-variable forecasting-model configuration space.
ConfigSpace builtin_space();
std::string_view builtin_space_document();

// Representative value of bin k (1-based) out of K uniform bins over [a, b].
double bin_value(double a, double b, std::size_t K, std::size_t k, Scale scale);

// Maps between a variable's value and its unit coordinate in [0, 1]; log
// scale is uniform in log space.
double to_unit(double value, double a, double b, Scale scale);
double from_unit(double u, double a, double b, Scale scale);

struct RefineSettings {
    std::size_t initial_bins = 6;
    double mass_threshold = 0.5; // delta_h
    unsigned persistence = 3;    // H
    double min_unit_width = 1e-9;
};

// Interval partition of one continuous variable. Cuts live in unit
// coordinates; every interval carries an id that never changes and is never
// reused, so keys and archive entries survive later splits.
class Partition {
public:
    Partition(double lower, double upper, Scale scale, std::size_t bins);

    std::size_t bins() const { return ids_.size(); }
    double lower() const { return lower_; }
    double upper() const { return upper_; }
    Scale scale() const { return scale_; }

    double representative(std::size_t bin) const;
    double representative_unit(std::size_t bin) const { return 0.5 * (cuts_[bin] + cuts_[bin + 1]); }
    std::vector<double> breakpoints() const;
    std::span<const double> unit_cuts() const { return cuts_; }
    std::uint64_t id(std::size_t bin) const { return ids_[bin]; }
    std::span<const std::uint64_t> ids() const { return ids_; }

    // Interval holding value, intervals half-open except the last.
    std::size_t locate(double value) const;
    // Bin whose representative is closest in unit coordinates; ties go low.
    std::size_t nearest_unit(double u) const;
    std::size_t nearest(double value) const { return nearest_unit(to_unit(value, lower_, upper_, scale_)); }

    std::span<const unsigned> counters() const { return counters_; }

private:
    friend class RefinementState;

    double lower_;
    double upper_;
    Scale scale_;
    std::vector<double> cuts_;
    std::vector<std::uint64_t> ids_;
    std::vector<unsigned> counters_;
    std::uint64_t next_id_;
};

struct SplitEvent {
    std::size_t dim = 0;
    std::size_t bin = 0; // index in the partition before the split
    std::uint64_t parent_id = 0;
    std::uint64_t left_id = 0;
    std::uint64_t right_id = 0;
};

struct DecodedConfig;

class RefinementState {
public:
    RefinementState() = default;
    RefinementState(const ConfigSpace& space, RefineSettings settings = {});

    const RefineSettings& settings() const { return settings_; }
    bool tracks(std::size_t j) const { return j < parts_.size() && parts_[j].has_value(); }
    const Partition& partition(std::size_t j) const { return *parts_[j]; }

    // Counter update from the current non-dominated set. No-op on an empty front.
    void update(std::span<const DecodedConfig> front);
    // Interval masses for dimension j over front (exposed for tests).
    std::vector<double> masses(std::size_t j, std::span<const DecodedConfig> front) const;
    // Splits every interval whose counter reached the persistence threshold.
    std::vector<SplitEvent> apply();

private:
    RefineSettings settings_;
    std::vector<std::optional<Partition>> parts_;
};

// Number of choices currently available on dimension j.
std::size_t choice_count(const ConfigSpace& space, const RefinementState& refine, std::size_t j);

// Fixed-length genotype. Genes are 0-based candidate indices (discrete) or
// bin indices into the current partition (continuous). frozen caches the
// last valid gene of every dimension; inactive genes are pinned to it.
struct Genotype {
    std::vector<std::size_t> genes;
    std::vector<std::size_t> frozen;

    explicit Genotype(std::size_t dims = 0) : genes(dims, 0), frozen(dims, 0) {}
    friend bool operator==(const Genotype&, const Genotype&) = default;
};

struct ActiveValue {
    std::size_t choice = 0;      // candidate index or bin index at decode time
    std::uint64_t canonical = 0; // candidate index or stable interval id
    double real = 0.0;           // representative value of continuous dims

    friend bool operator==(const ActiveValue&, const ActiveValue&) = default;
};

struct DecodedConfig {
    std::vector<std::optional<ActiveValue>> values;

    bool active(std::size_t j) const { return values[j].has_value(); }
    std::size_t size() const { return values.size(); }
    friend bool operator==(const DecodedConfig&, const DecodedConfig&) = default;
};

std::vector<bool> activity(const Genotype& g, const ConfigSpace& space);
DecodedConfig decode(const Genotype& g, const ConfigSpace& space, const RefinementState& refine);
Genotype repair(Genotype g, const ConfigSpace& space, const RefinementState& refine);
Genotype sample_random(const ConfigSpace& space, const RefinementState& refine, Rng& rng);

// Re-expresses continuous genes of g (valid under before) on the partitions
// of after, choosing the nearest new bin by representative value.
Genotype remap(const Genotype& g, const ConfigSpace& space, const RefinementState& before,
               const RefinementState& after);

// {name: value} over active dimensions.
Json to_json(const DecodedConfig& d, const ConfigSpace& space);
// Concrete value of an active discrete dimension.
const Json& candidate(const DecodedConfig& d, const ConfigSpace& space, std::size_t j);

std::string canonical_form(const DecodedConfig& d);
std::uint64_t canonical_key(const DecodedConfig& d);
std::string format_key(std::uint64_t key);

enum class Admission { admitted, duplicate };

class DedupRegistry {
public:
    static constexpr std::size_t default_trials = 50;

    explicit DedupRegistry(std::size_t trials = default_trials) : trials_(trials) {}

    Admission admit(std::uint64_t key) { return keys_.insert(key).second ? Admission::admitted : Admission::duplicate; }
    bool contains(std::uint64_t key) const { return keys_.contains(key); }
    std::size_t size() const { return keys_.size(); }
    std::size_t trials() const { return trials_; }

private:
    std::size_t trials_;
    std::unordered_set<std::uint64_t> keys_;
};

} // namespace phmoea
