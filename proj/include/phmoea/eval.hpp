#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "phmoea/bench.hpp"
#include "phmoea/space.hpp"

namespace phmoea {

enum class EvalStatus { ok, error };

struct Evaluation {
    std::uint64_t key = 0;
    double f1 = 0.0;
    double f2 = 0.0;
    EvalStatus status = EvalStatus::ok;
    double wall_seconds = 0.0;
    std::string message;

    bool ok() const { return status == EvalStatus::ok; }
};

// Turns a decoded candidate into its objective vector. Implementations must
// tolerate concurrent calls up to concurrency(); every call counts as one FE.
class Evaluator {
public:
    virtual ~Evaluator() = default;

    Evaluation operator()(const DecodedConfig& d, std::uint64_t key);

    virtual const ConfigSpace& space() const = 0;
    virtual std::size_t concurrency() const { return 1; }

    std::size_t calls() const { return calls_.load(); }

protected:
    virtual Evaluation evaluate(const DecodedConfig& d) = 0;

private:
    std::atomic<std::size_t> calls_{0};
};

class BenchmarkEvaluator final : public Evaluator {
public:
    explicit BenchmarkEvaluator(HBenchProblem problem);

    const ConfigSpace& space() const override { return space_; }
    const HBenchProblem& problem() const { return problem_; }

protected:
    Evaluation evaluate(const DecodedConfig& d) override;

private:
    HBenchProblem problem_;
    ConfigSpace space_;
};

Evaluation eval_benchmark(const DecodedConfig& d, const ConfigSpace& space, const HBenchProblem& problem);

// Seed of the synthetic target configuration the surrogate error is measured
// against. Changing it changes every surrogate result.
inline constexpr std::uint64_t kSurrogateTargetSeed = 0x5eed'7a26'e7c0'ffeeULL;

struct SurrogateOptions {
    std::size_t targets = 5;
    std::size_t input_channels = 50;
    bool stagnant = false; // constant f1, used to exercise early stopping
    std::uint64_t seed = kSurrogateTargetSeed;
};

// Desk-scale stand-in for a train/validate run over the builtin space: f2 is
// the exact trainable parameter count; f1 is a smooth synthetic error that is
// minimal at a hidden target and penalizes capacity below the target's.
class SurrogateEvaluator final : public Evaluator {
public:
    explicit SurrogateEvaluator(ConfigSpace space, SurrogateOptions options = {});

    const ConfigSpace& space() const override { return space_; }
    const SurrogateOptions& options() const { return options_; }
    const Genotype& target() const { return target_; }
    const DecodedConfig& target_config() const { return target_config_; }

    double error(const DecodedConfig& d) const;
    std::uint64_t params(const DecodedConfig& d) const;

protected:
    Evaluation evaluate(const DecodedConfig& d) override;

private:
    ConfigSpace space_;
    SurrogateOptions options_;
    RefinementState grid_;
    Genotype target_;
    DecodedConfig target_config_;
    std::vector<double> weights_;
    std::vector<std::vector<double>> offsets_; // categorical dims, per candidate
    std::vector<bool> ordinal_;
    double target_log_params_ = 0.0;
};

Evaluation eval_surrogate(const DecodedConfig& d, const ConfigSpace& space, std::size_t targets,
                          std::size_t input_channels);

struct ExternalOptions {
    std::string command;             // run through /bin/sh -c
    std::size_t workers = 1;
    std::chrono::milliseconds timeout{600'000};
    std::size_t targets = 5;
};

class WorkerProcess;

// Line-delimited JSON over worker stdin/stdout, one request in flight per
// worker. A worker that times out or breaks protocol is restarted.
class ExternalEvaluator final : public Evaluator {
public:
    ExternalEvaluator(ConfigSpace space, ExternalOptions options);
    ~ExternalEvaluator() override;

    const ConfigSpace& space() const override { return space_; }
    std::size_t concurrency() const override { return options_.workers; }

protected:
    Evaluation evaluate(const DecodedConfig& d) override;

private:
    std::unique_ptr<WorkerProcess> acquire();
    void release(std::unique_ptr<WorkerProcess> worker);

    ConfigSpace space_;
    ExternalOptions options_;
    std::mutex mutex_;
    std::condition_variable available_;
    std::vector<std::unique_ptr<WorkerProcess>> idle_;
    std::size_t spawned_ = 0;
    std::atomic<std::int64_t> next_id_{1};
};

// Protocol helpers, exposed for tests.
Json make_request(std::int64_t id, const Json& config, std::size_t targets);
Evaluation parse_response(const std::string& line, std::int64_t expected_id);

} // namespace phmoea
