// SPDX-License-Identifier: Apache-2.0
#include "linefix/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <stdexcept>

namespace linefix {

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::string& cwd, double timeout_s) {
    if (argv.empty()) throw std::invalid_argument("run_process: empty argv");

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw std::runtime_error("run_process: pipe failed");

    pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("run_process: fork failed");

    if (pid == 0) {
        // child: own process group so a timeout can kill the whole tree
        setpgid(0, 0);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(err_pipe[1], STDERR_FILENO);
        close(out_pipe[0]);
        close(out_pipe[1]);
        close(err_pipe[0]);
        close(err_pipe[1]);
        if (!cwd.empty() && chdir(cwd.c_str()) != 0) _exit(127);
        std::vector<char*> args;
        args.reserve(argv.size() + 1);
        for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
        args.push_back(nullptr);
        execvp(args[0], args.data());
        _exit(127);
    }

    setpgid(pid, pid);  // mirror the child's call; loser of the race is a no-op
    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    ProcessResult res;
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                        std::chrono::duration<double>(timeout_s));
    bool has_deadline = timeout_s > 0.0;

    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    bool open_fds[2] = {true, true};
    char buf[4096];

    auto drain = [&](int idx, std::string& sink) {
        for (;;) {
            ssize_t n = read(fds[idx].fd, buf, sizeof(buf));
            if (n > 0) {
                sink.append(buf, static_cast<size_t>(n));
            } else if (n == 0) {
                open_fds[idx] = false;
                return;
            } else {
                if (errno == EAGAIN || errno == EWOULDBLOCK) return;
                open_fds[idx] = false;
                return;
            }
        }
    };

    while (open_fds[0] || open_fds[1]) {
        int timeout_ms = -1;
        if (has_deadline) {
            auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
            if (left <= 0) {
                kill(-pid, SIGKILL);
                res.timed_out = true;
                has_deadline = false;
                timeout_ms = -1;
            } else {
                timeout_ms = static_cast<int>(left);
            }
        }
        struct pollfd active[2];
        int map[2], n_active = 0;
        for (int i = 0; i < 2; ++i)
            if (open_fds[i]) {
                active[n_active] = fds[i];
                map[n_active++] = i;
            }
        int rc = poll(active, static_cast<nfds_t>(n_active), timeout_ms);
        if (rc < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (rc == 0) continue;  // deadline check on next loop
        for (int i = 0; i < n_active; ++i) {
            if (active[i].revents & (POLLIN | POLLHUP | POLLERR))
                drain(map[i], map[i] == 0 ? res.out : res.err);
        }
    }
    close(out_pipe[0]);
    close(err_pipe[0]);

    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (res.timed_out) {
        res.exit_code = -1;
    } else if (WIFEXITED(status)) {
        res.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
        res.exit_code = 128 + WTERMSIG(status);
    }
    return res;
}

}  // namespace linefix
