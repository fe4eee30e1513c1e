#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "phmoea/space.hpp"

namespace phmoea {

class DecodeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TimeComponent {
    double index = 0.0;  // tau in [0, period - 1]
    double period = 1.0;
};

// Sine/cosine pair per component, concatenated: length 2 * components.size().
std::vector<double> time_embedding(std::span<const TimeComponent> components);

// Channels after concatenating aligned sources with the broadcast time embedding.
std::size_t input_channels(std::span<const std::size_t> source_channels, std::size_t time_vars);

struct LayerEntry {
    std::string name;
    std::string op;
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 0;
    std::size_t padding = 0;
    std::size_t length = 0; // temporal length of the output
    std::uint64_t params = 0;
};

// Deterministic description of the bi-branch convolutional forecaster.
struct NetworkSpec {
    std::size_t aligned_length = 0;
    std::size_t input_channels = 0;
    std::size_t proj_channels = 0;
    std::array<std::size_t, 3> channels{};
    std::array<std::size_t, 3> short_kernels{};
    std::array<std::size_t, 3> long_kernels{};
    std::string norm;
    std::string activation;
    double dropout = 0.0;
    std::string fusion;
    std::string fusion_mode; // weighting / cross_mapping sub-mode, empty otherwise
    std::size_t targets = 0;
    std::vector<LayerEntry> layers;

    std::size_t fused_channels() const;
    std::size_t head_inputs() const { return aligned_length * fused_channels(); }
    std::uint64_t breakdown_total() const;
};

// Builds from a {name: value} configuration over the builtin variable names.
NetworkSpec build_graph(const Json& config, std::size_t input_channels, std::size_t targets);
NetworkSpec build_graph(const DecodedConfig& d, const ConfigSpace& space, std::size_t input_channels,
                        std::size_t targets);

// Trainable parameter count recomputed from the structural fields.
std::uint64_t count_params(const NetworkSpec& spec);

// Parameters contributed by the branch-fusion module at fused width c.
std::uint64_t fusion_params(const std::string& fusion, const std::string& mode, std::size_t c);

Json to_json(const NetworkSpec& spec);

} // namespace phmoea
