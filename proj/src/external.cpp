#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <mutex>
#include <optional>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <fmt/format.h>

#include "phmoea/eval.hpp"

extern char** environ;

namespace phmoea {

namespace {

void ignore_sigpipe()
{
    static std::once_flag once;
    std::call_once(once, [] {
        struct sigaction sa {};
        sa.sa_handler = SIG_IGN;
        sigemptyset(&sa.sa_mask);
        sigaction(SIGPIPE, &sa, nullptr);
    });
}

Evaluation error_evaluation(std::string message)
{
    Evaluation e;
    e.status = EvalStatus::error;
    e.message = std::move(message);
    return e;
}

struct Response {
    Evaluation eval;
    bool protocol_violation = false;
};

Response read_response(const std::string& line, std::int64_t expected_id)
{
    auto violation = [](std::string msg) { return Response{error_evaluation("protocol: " + std::move(msg)), true}; };
    Json doc;
    try {
        doc = Json::parse(line);
    } catch (const Json::parse_error& ex) {
        return violation(fmt::format("malformed response ({})", ex.what()));
    }
    if (!doc.is_object()) {
        return violation("response is not an object");
    }
    if (!doc.contains("id") || !doc["id"].is_number_integer()) {
        return violation("response has no integer id");
    }
    if (doc["id"].get<std::int64_t>() != expected_id) {
        return violation(fmt::format("response id {} does not match request id {}", doc["id"].get<std::int64_t>(),
                                     expected_id));
    }
    if (!doc.contains("status") || !doc["status"].is_string()) {
        return violation("response has no status");
    }
    const auto status = doc["status"].get<std::string>();
    if (status == "error") {
        auto e = error_evaluation(doc.value("msg", std::string("worker reported an error")));
        return Response{std::move(e), false};
    }
    if (status != "ok") {
        return violation(fmt::format("unknown status '{}'", status));
    }
    for (const char* field : {"f1", "f2"}) {
        if (!doc.contains(field) || !doc[field].is_number()) {
            return violation(fmt::format("ok response is missing numeric '{}'", field));
        }
    }
    Evaluation e;
    e.f1 = doc["f1"].get<double>();
    e.f2 = doc["f2"].get<double>();
    if (!(std::isfinite(e.f1) && std::isfinite(e.f2))) {
        return violation("non-finite objective");
    }
    return Response{e, false};
}

} // namespace

class WorkerProcess {
public:
    explicit WorkerProcess(const std::string& command)
    {
        ignore_sigpipe();
        int to_child[2];
        int from_child[2];
        if (pipe2(to_child, O_CLOEXEC) != 0) {
            throw std::runtime_error(fmt::format("pipe: {}", std::strerror(errno)));
        }
        if (pipe2(from_child, O_CLOEXEC) != 0) {
            ::close(to_child[0]);
            ::close(to_child[1]);
            throw std::runtime_error(fmt::format("pipe: {}", std::strerror(errno)));
        }
        posix_spawn_file_actions_t actions;
        posix_spawn_file_actions_init(&actions);
        posix_spawn_file_actions_adddup2(&actions, to_child[0], STDIN_FILENO);
        posix_spawn_file_actions_adddup2(&actions, from_child[1], STDOUT_FILENO);
        std::string shell = "/bin/sh";
        std::string flag = "-c";
        std::string cmd = command;
        char* argv[] = {shell.data(), flag.data(), cmd.data(), nullptr};
        // Own process group, so teardown also reaches whatever the shell started.
        posix_spawnattr_t attr;
        posix_spawnattr_init(&attr);
        posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
        posix_spawnattr_setpgroup(&attr, 0);
        const int rc = posix_spawn(&pid_, "/bin/sh", &actions, &attr, argv, environ);
        posix_spawnattr_destroy(&attr);
        posix_spawn_file_actions_destroy(&actions);
        ::close(to_child[0]);
        ::close(from_child[1]);
        if (rc != 0) {
            ::close(to_child[1]);
            ::close(from_child[0]);
            throw std::runtime_error(fmt::format("cannot start worker '{}': {}", command, std::strerror(rc)));
        }
        in_ = to_child[1];
        out_ = from_child[0];
    }

    WorkerProcess(const WorkerProcess&) = delete;
    WorkerProcess& operator=(const WorkerProcess&) = delete;

    ~WorkerProcess()
    {
        ::close(in_);
        ::close(out_);
        if (pid_ > 0) {
            ::kill(-pid_, SIGTERM);
            int status = 0;
            ::waitpid(pid_, &status, 0);
        }
    }

    bool send(const std::string& line)
    {
        std::size_t done = 0;
        while (done < line.size()) {
            const auto n = ::write(in_, line.data() + done, line.size() - done);
            if (n < 0) {
                if (errno == EINTR) {
                    continue;
                }
                return false;
            }
            done += static_cast<std::size_t>(n);
        }
        return true;
    }

    // Next newline-terminated line, or nullopt on timeout or end of stream.
    std::optional<std::string> read_line(std::chrono::milliseconds timeout, bool& timed_out)
    {
        timed_out = false;
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        for (;;) {
            if (const auto pos = buffer_.find('\n'); pos != std::string::npos) {
                std::string line = buffer_.substr(0, pos);
                buffer_.erase(0, pos + 1);
                return line;
            }
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline -
                                                                                    std::chrono::steady_clock::now());
            if (left.count() <= 0) {
                timed_out = true;
                return std::nullopt;
            }
            pollfd pfd{out_, POLLIN, 0};
            const int rc = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
            if (rc < 0) {
                if (errno == EINTR) {
                    continue;
                }
                return std::nullopt;
            }
            if (rc == 0) {
                continue;
            }
            char chunk[4096];
            const auto n = ::read(out_, chunk, sizeof chunk);
            if (n < 0 && errno == EINTR) {
                continue;
            }
            if (n <= 0) {
                return std::nullopt;
            }
            buffer_.append(chunk, static_cast<std::size_t>(n));
        }
    }

private:
    pid_t pid_ = -1;
    int in_ = -1;
    int out_ = -1;
    std::string buffer_;
};

Json make_request(std::int64_t id, const Json& config, std::size_t targets)
{
    return Json{{"id", id}, {"config", config}, {"targets", targets}};
}

Evaluation parse_response(const std::string& line, std::int64_t expected_id)
{
    return read_response(line, expected_id).eval;
}

ExternalEvaluator::ExternalEvaluator(ConfigSpace space, ExternalOptions options)
    : space_(std::move(space)), options_(std::move(options))
{
    if (options_.command.empty()) {
        throw std::invalid_argument("external evaluator needs a worker command");
    }
    if (options_.workers == 0) {
        throw std::invalid_argument("external evaluator needs at least one worker");
    }
}

ExternalEvaluator::~ExternalEvaluator() = default;

std::unique_ptr<WorkerProcess> ExternalEvaluator::acquire()
{
    std::unique_lock lock(mutex_);
    available_.wait(lock, [&] { return !idle_.empty() || spawned_ < options_.workers; });
    if (!idle_.empty()) {
        auto worker = std::move(idle_.back());
        idle_.pop_back();
        return worker;
    }
    ++spawned_;
    lock.unlock();
    try {
        return std::make_unique<WorkerProcess>(options_.command);
    } catch (...) {
        lock.lock();
        --spawned_;
        available_.notify_one();
        throw;
    }
}

void ExternalEvaluator::release(std::unique_ptr<WorkerProcess> worker)
{
    {
        std::lock_guard lock(mutex_);
        if (worker) {
            idle_.push_back(std::move(worker));
        } else {
            --spawned_;
        }
    }
    available_.notify_one();
}

Evaluation ExternalEvaluator::evaluate(const DecodedConfig& d)
{
    const auto id = next_id_++;
    const auto request = make_request(id, to_json(d, space_), options_.targets).dump() + "\n";
    auto worker = acquire();
    if (!worker->send(request)) {
        worker.reset();
        release(nullptr);
        return error_evaluation("worker closed its input");
    }
    bool timed_out = false;
    const auto line = worker->read_line(options_.timeout, timed_out);
    if (!line) {
        worker.reset();
        release(nullptr);
        return error_evaluation(timed_out ? fmt::format("worker timed out after {} ms", options_.timeout.count())
                                          : std::string("worker exited without responding"));
    }
    auto response = read_response(*line, id);
    if (response.protocol_violation) {
        worker.reset();
        release(nullptr);
    } else {
        release(std::move(worker));
    }
    return response.eval;
}

} // namespace phmoea
