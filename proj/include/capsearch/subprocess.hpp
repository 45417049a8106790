#pragma once
#include <fcntl.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "capsearch/backend.hpp"
#include "capsearch/errors.hpp"

namespace capsearch {

// Loads a config-space file: a JSON list of flag-string arrays, one per
// configuration.
inline std::vector<std::vector<std::string>> load_config_space(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config-space file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad config-space JSON '" + path.string() + "': " + e.what());
    }
    if (!doc.is_array() || doc.empty())
        throw ParseError("config-space file must be a non-empty JSON list of flag arrays");
    std::vector<std::vector<std::string>> out;
    for (const auto& entry : doc) {
        if (!entry.is_array()) throw ParseError("config-space entries must be arrays of strings");
        auto& flags = out.emplace_back();
        for (const auto& f : entry) flags.push_back(f.get<std::string>());
    }
    return out;
}

// Regular files in the directory, sorted by name for a stable instance order.
inline std::vector<std::string> list_instance_files(const std::filesystem::path& dir) {
    std::vector<std::string> files;
    if (!std::filesystem::is_directory(dir))
        throw InvalidParameter("instance directory '" + dir.string() + "' does not exist");
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidParameter("instance directory '" + dir.string() + "' is empty");
    return files;
}

struct SubprocessOptions {
    std::string command_template;  // whitespace-split; {instance} and {flags} placeholders
    std::vector<std::vector<std::string>> config_flags;
    std::vector<std::string> instance_files;
    double kappa0 = 1.0;
    bool wall_clock = false;            // default: child CPU time (user+system)
    bool nonzero_exit_as_timeout = false;
    double poll_interval = 0.01;        // seconds; the documented timer resolution
};

// Runs one solver invocation per measurement, killing the child (and its
// process group) once the limit is reached. CPU mode reads the child's
// user+system time; wall mode uses a monotonic clock. Enforcement resolution
// equals the poll interval (default 10 ms, well under 0.1 s).
class SubprocessBackend final : public MeasurementBackend {
  public:
    explicit SubprocessBackend(SubprocessOptions opts) : opts_(std::move(opts)) {
        if (opts_.command_template.empty())
            throw InvalidParameter("subprocess backend needs a command template");
        if (opts_.config_flags.empty()) throw InvalidParameter("subprocess backend needs configurations");
        if (opts_.instance_files.empty()) throw InvalidParameter("subprocess backend needs instances");
        if (!(opts_.kappa0 > 0.0)) throw InvalidParameter("kappa0 must be > 0");
        std::istringstream iss(opts_.command_template);
        std::string tok;
        while (iss >> tok) template_tokens_.push_back(tok);
        if (template_tokens_.empty()) throw InvalidParameter("command template is blank");
    }

    Measurement measure(std::int64_t config, std::int64_t instance, double limit) override {
        if (!(limit > 0.0)) throw InvalidParameter("measurement limit must be > 0");
        if (config < 0 || config >= config_count() || instance < 0 || instance >= instance_count())
            throw InvalidParameter("measurement request outside the configured space");

        const std::vector<std::string> argv_store = build_argv(config, instance);
        std::vector<char*> argv;
        argv.reserve(argv_store.size() + 1);
        for (const auto& s : argv_store) argv.push_back(const_cast<char*>(s.c_str()));
        argv.push_back(nullptr);

        int err_pipe[2];
        if (pipe2(err_pipe, O_CLOEXEC) != 0) throw SubprocessError("pipe2 failed");

        const auto wall_start = std::chrono::steady_clock::now();
        const pid_t pid = fork();
        if (pid < 0) {
            close(err_pipe[0]);
            close(err_pipe[1]);
            throw SubprocessError("fork failed");
        }
        if (pid == 0) {
            // Child: own process group so the whole solver tree can be killed.
            setpgid(0, 0);
            if (const char* scratch = std::getenv("CAPSEARCH_SCRATCH"))
                setenv("TMPDIR", scratch, 1);
            const int devnull = open("/dev/null", O_RDWR);
            if (devnull >= 0) {
                dup2(devnull, STDOUT_FILENO);
                dup2(devnull, STDERR_FILENO);
            }
            execvp(argv[0], argv.data());
            const int err = errno;
            ssize_t ignored = write(err_pipe[1], &err, sizeof(err));
            (void)ignored;
            _exit(127);
        }
        close(err_pipe[1]);

        Measurement m;
        m.config_id = config;
        m.instance_id = instance;
        m.limit = limit;

        bool killed = false;
        int status = 0;
        rusage usage{};
        while (true) {
            const pid_t r = wait4(pid, &status, WNOHANG, &usage);
            if (r == pid) break;
            if (r < 0) {
                close(err_pipe[0]);
                throw SubprocessError("wait4 failed for solver process");
            }
            const double elapsed = opts_.wall_clock ? wall_seconds(wall_start) : proc_cpu_seconds(pid);
            if (elapsed >= limit) {
                kill(-pid, SIGKILL);
                kill(pid, SIGKILL);
                killed = true;
                if (wait4(pid, &status, 0, &usage) < 0)
                    throw SubprocessError("wait4 failed after kill");
                break;
            }
            std::this_thread::sleep_for(
                std::chrono::duration<double>(std::min(opts_.poll_interval, limit - elapsed)));
        }

        int exec_errno = 0;
        const ssize_t got = read(err_pipe[0], &exec_errno, sizeof(exec_errno));
        close(err_pipe[0]);
        if (got == sizeof(exec_errno))
            throw SubprocessError("cannot exec '" + argv_store[0] +
                                  "': " + std::strerror(exec_errno));

        const double measured = opts_.wall_clock
                                    ? wall_seconds(wall_start)
                                    : seconds(usage.ru_utime) + seconds(usage.ru_stime);
        if (killed || measured >= limit) {
            m.elapsed = limit;
            m.outcome = Outcome::TimedOut;
            return m;
        }
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            if (opts_.nonzero_exit_as_timeout) {
                m.elapsed = limit;
                m.outcome = Outcome::TimedOut;
                return m;
            }
            throw SubprocessError("solver exited abnormally (config " + std::to_string(config) +
                                  ", instance " + std::to_string(instance) + ", status " +
                                  std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + ")");
        }
        m.elapsed = measured;
        m.outcome = Outcome::Finished;
        return m;
    }

    std::int64_t config_count() const override {
        return static_cast<std::int64_t>(opts_.config_flags.size());
    }
    std::int64_t instance_count() const override {
        return static_cast<std::int64_t>(opts_.instance_files.size());
    }
    double kappa0() const override { return opts_.kappa0; }

  private:
    static double seconds(const timeval& tv) {
        return static_cast<double>(tv.tv_sec) + static_cast<double>(tv.tv_usec) * 1e-6;
    }

    static double wall_seconds(std::chrono::steady_clock::time_point start) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    // Live user+system CPU of the child, from /proc/<pid>/stat.
    static double proc_cpu_seconds(pid_t pid) {
        std::ifstream stat("/proc/" + std::to_string(pid) + "/stat");
        std::string content;
        if (!std::getline(stat, content)) return 0.0;
        const std::size_t close_paren = content.rfind(')');
        if (close_paren == std::string::npos) return 0.0;
        std::istringstream rest(content.substr(close_paren + 1));
        std::string tok;
        long utime = 0, stime = 0;
        // fields after comm: state(1) ... utime(12) stime(13)
        for (int field = 1; rest >> tok && field <= 13; ++field) {
            if (field == 12) utime = std::atol(tok.c_str());
            if (field == 13) stime = std::atol(tok.c_str());
        }
        const double tick = static_cast<double>(sysconf(_SC_CLK_TCK));
        return static_cast<double>(utime + stime) / tick;
    }

    std::vector<std::string> build_argv(std::int64_t config, std::int64_t instance) const {
        const auto& flags = opts_.config_flags[static_cast<std::size_t>(config)];
        const auto& file = opts_.instance_files[static_cast<std::size_t>(instance)];
        std::vector<std::string> argv;
        for (const auto& tok : template_tokens_) {
            if (tok == "{flags}") {
                argv.insert(argv.end(), flags.begin(), flags.end());
                continue;
            }
            std::string t = tok;
            for (std::size_t pos = t.find("{instance}"); pos != std::string::npos;
                 pos = t.find("{instance}"))
                t.replace(pos, 10, file);
            argv.push_back(std::move(t));
        }
        return argv;
    }

    SubprocessOptions opts_;
    std::vector<std::string> template_tokens_;
};

}  // namespace capsearch
