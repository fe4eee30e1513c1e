#include "phmoea/netspec.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace phmoea {

std::vector<double> time_embedding(std::span<const TimeComponent> components)
{
    std::vector<double> out;
    out.reserve(2 * components.size());
    for (const auto& c : components) {
        if (!(c.period > 0.0) || c.index < 0.0 || c.index > c.period - 1.0) {
            throw std::invalid_argument(fmt::format("time index {} outside [0, {}]", c.index, c.period - 1.0));
        }
        const double phase = 2.0 * std::numbers::pi * c.index / c.period;
        out.push_back(std::sin(phase));
        out.push_back(std::cos(phase));
    }
    return out;
}

std::size_t input_channels(std::span<const std::size_t> source_channels, std::size_t time_vars)
{
    std::size_t total = 2 * time_vars;
    for (auto c : source_channels) {
        total += c;
    }
    return total;
}

std::size_t NetworkSpec::fused_channels() const
{
    const auto c = channels[2];
    if (fusion == "concat") {
        return 2 * c;
    }
    if ((fusion == "weighting" || fusion == "cross_mapping") && fusion_mode == "concat") {
        return 2 * c;
    }
    return c;
}

std::uint64_t NetworkSpec::breakdown_total() const
{
    std::uint64_t total = 0;
    for (const auto& layer : layers) {
        total += layer.params;
    }
    return total;
}

std::uint64_t fusion_params(const std::string& fusion, const std::string& mode, std::size_t c)
{
    const std::uint64_t C = c;
    if (fusion == "concat" || fusion == "add") {
        return 0;
    }
    if (fusion == "weighting") {
        return 2 * C; // w over the pooled concatenation, no bias
    }
    if (fusion == "gating") {
        return 2 * C * C + C;
    }
    if (fusion == "attention") {
        return 3 * C * C; // W_Q, W_K, W_V
    }
    if (fusion == "cross_mapping") {
        std::uint64_t p = 2 * (C * C + C);
        if (mode == "gated") {
            p += 2 * C * C + C;
        }
        return p;
    }
    throw DecodeError(fmt::format("unknown fusion operator '{}'", fusion));
}

namespace {

const Json& require(const Json& config, const char* name)
{
    if (!config.is_object() || !config.contains(name)) {
        throw DecodeError(fmt::format("configuration is missing required variable '{}'", name));
    }
    return config.at(name);
}

std::array<std::size_t, 3> triple(const Json& value, const char* name)
{
    if (!value.is_array() || value.size() != 3) {
        throw DecodeError(fmt::format("'{}' must be a list of three kernel sizes", name));
    }
    std::array<std::size_t, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = value[i].get<std::size_t>();
        if (out[i] % 2 == 0) {
            throw DecodeError(fmt::format("'{}' kernel sizes must be odd", name));
        }
    }
    return out;
}

} // namespace

NetworkSpec build_graph(const Json& config, std::size_t c_in, std::size_t targets)
{
    NetworkSpec spec;
    spec.aligned_length = require(config, "aligned_length").get<std::size_t>();
    spec.input_channels = c_in;
    spec.proj_channels = require(config, "proj_channels").get<std::size_t>();
    spec.channels = {require(config, "channels1").get<std::size_t>(), require(config, "channels2").get<std::size_t>(),
                     require(config, "channels3").get<std::size_t>()};
    spec.short_kernels = triple(require(config, "short_kernels"), "short_kernels");
    spec.long_kernels = triple(require(config, "long_kernels"), "long_kernels");
    spec.norm = require(config, "norm").get<std::string>();
    spec.activation = require(config, "activation").get<std::string>();
    spec.dropout = require(config, "dropout").get<double>();
    spec.fusion = require(config, "fusion").get<std::string>();
    if (spec.fusion == "weighting") {
        spec.fusion_mode = require(config, "weighting_mode").get<std::string>();
    } else if (spec.fusion == "cross_mapping") {
        spec.fusion_mode = require(config, "cross_mapping_mode").get<std::string>();
    }
    spec.targets = targets;

    const auto L = spec.aligned_length;
    auto& layers = spec.layers;
    layers.push_back({"projection", "Linear", c_in, spec.proj_channels, 1, 0, L,
                      static_cast<std::uint64_t>(c_in) * spec.proj_channels + spec.proj_channels});

    for (const auto& [branch, kernels] : {std::pair{"short", spec.short_kernels}, std::pair{"long", spec.long_kernels}}) {
        std::size_t prev = spec.proj_channels;
        for (std::size_t i = 0; i < 3; ++i) {
            const auto c = spec.channels[i];
            const auto k = kernels[i];
            const auto prefix = fmt::format("{}{}", branch, i + 1);
            layers.push_back({prefix + ".conv", "Conv1d", prev, c, k, (k - 1) / 2, L,
                              static_cast<std::uint64_t>(prev) * c * k + c});
            layers.push_back({prefix + ".norm", spec.norm, c, c, 0, 0, L, 2 * static_cast<std::uint64_t>(c)});
            layers.push_back({prefix + ".act", spec.activation, c, c, 0, 0, L, 0});
            layers.push_back({prefix + ".dropout", "Dropout", c, c, 0, 0, L, 0});
            prev = c;
        }
    }

    const auto cf = spec.channels[2];
    const auto fused = spec.fused_channels();
    const auto op = spec.fusion_mode.empty() ? spec.fusion : spec.fusion + "/" + spec.fusion_mode;
    layers.push_back({"fusion", op, 2 * cf, fused, 0, 0, L, fusion_params(spec.fusion, spec.fusion_mode, cf)});
    layers.push_back({"flatten", "Flatten", fused, L * fused, 0, 0, 1, 0});
    layers.push_back({"head", "Linear", L * fused, targets, 0, 0, 1,
                      static_cast<std::uint64_t>(targets) * L * fused + targets});
    return spec;
}

NetworkSpec build_graph(const DecodedConfig& d, const ConfigSpace& space, std::size_t c_in, std::size_t targets)
{
    return build_graph(to_json(d, space), c_in, targets);
}

std::uint64_t count_params(const NetworkSpec& spec)
{
    using U = std::uint64_t;
    const U c0 = spec.proj_channels;
    U total = static_cast<U>(spec.input_channels) * c0 + c0;
    for (const auto& kernels : {spec.short_kernels, spec.long_kernels}) {
        U prev = c0;
        for (std::size_t i = 0; i < 3; ++i) {
            const U c = spec.channels[i];
            total += prev * c * kernels[i] + c; // conv weight + bias
            total += 2 * c;                      // norm affine
            prev = c;
        }
    }
    total += fusion_params(spec.fusion, spec.fusion_mode, spec.channels[2]);
    const U k = spec.targets;
    total += k * spec.head_inputs() + k;
    return total;
}

Json to_json(const NetworkSpec& spec)
{
    Json layers = Json::array();
    for (const auto& l : spec.layers) {
        Json item{{"name", l.name}, {"op", l.op}, {"in_channels", l.in_channels}, {"out_channels", l.out_channels}};
        if (l.kernel > 0) {
            item["kernel"] = l.kernel;
            item["padding"] = l.padding;
        }
        item["output_shape"] = l.length > 1 ? Json::array({l.length, l.out_channels}) : Json::array({l.out_channels});
        item["params"] = l.params;
        layers.push_back(std::move(item));
    }
    Json out;
    out["aligned_length"] = spec.aligned_length;
    out["input_channels"] = spec.input_channels;
    out["proj_channels"] = spec.proj_channels;
    out["channels"] = spec.channels;
    out["short_kernels"] = spec.short_kernels;
    out["long_kernels"] = spec.long_kernels;
    out["norm"] = spec.norm;
    out["activation"] = spec.activation;
    out["dropout"] = spec.dropout;
    out["fusion"] = spec.fusion;
    if (!spec.fusion_mode.empty()) {
        out["fusion_mode"] = spec.fusion_mode;
    }
    out["fused_channels"] = spec.fused_channels();
    out["targets"] = spec.targets;
    out["layers"] = std::move(layers);
    out["total_params"] = count_params(spec);
    return out;
}

} // namespace phmoea
