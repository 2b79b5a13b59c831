#include "crucible/launch/executor.hpp"

#include <fcntl.h>
#include <fnmatch.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <iostream>

#include "crucible/error.hpp"
#include "crucible/launch/launch_spec.hpp"
#include "crucible/util.hpp"

extern char** environ;

namespace crucible::launch {

namespace {

std::string substitute_pwd(const std::string& arg, const std::string& cwd) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto hit = arg.find(kPwd, pos);
    if (hit == std::string::npos) {
      out.append(arg, pos);
      return out;
    }
    out.append(arg, pos, hit - pos);
    out += cwd;
    pos = hit + kPwd.size();
  }
}

struct Pipe {
  int fds[2] = {-1, -1};
  Pipe() {
    if (::pipe2(fds, O_CLOEXEC) != 0) {
      throw Error(Errc::SpawnFailure, std::string("pipe: ") + std::strerror(errno));
    }
  }
  ~Pipe() { close_all(); }
  void close_read() {
    if (fds[0] >= 0) ::close(fds[0]);
    fds[0] = -1;
  }
  void close_write() {
    if (fds[1] >= 0) ::close(fds[1]);
    fds[1] = -1;
  }
  void close_all() {
    close_read();
    close_write();
  }
};

// posix_spawn file actions with RAII cleanup.
struct SpawnActions {
  posix_spawn_file_actions_t actions;
  SpawnActions() { posix_spawn_file_actions_init(&actions); }
  ~SpawnActions() { posix_spawn_file_actions_destroy(&actions); }
};

void drain(Pipe& out, Pipe& err, Execution& exec, bool echo) {
  std::array<pollfd, 2> fds{pollfd{out.fds[0], POLLIN, 0}, pollfd{err.fds[0], POLLIN, 0}};
  std::array<char, 4096> buf{};
  int open_streams = 2;
  while (open_streams > 0) {
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      auto n = ::read(fds[i].fd, buf.data(), buf.size());
      if (n <= 0) {
        fds[i].fd = -1;
        --open_streams;
        continue;
      }
      auto& sink = i == 0 ? exec.stdout_text : exec.stderr_text;
      sink.append(buf.data(), static_cast<std::size_t>(n));
      if (echo) {
        auto& os = i == 0 ? std::cout : std::cerr;
        os.write(buf.data(), n);
        os.flush();
      }
    }
  }
}

}  // namespace

Execution ProcessExecutor::execute(std::span<const std::string> argv) {
  if (argv.empty()) throw Error(Errc::SpawnFailure, "empty argument vector");
  Execution exec;
  exec.argv.assign(argv.begin(), argv.end());

  std::error_code ec;
  auto cwd = std::filesystem::current_path(ec).string();
  std::vector<std::string> args;
  args.reserve(argv.size());
  for (const auto& a : argv) args.push_back(substitute_pwd(a, cwd));
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());
  cargs.push_back(nullptr);

  Pipe out, err;
  SpawnActions sa;
  if (options_.capture) {
    posix_spawn_file_actions_adddup2(&sa.actions, out.fds[1], STDOUT_FILENO);
    posix_spawn_file_actions_adddup2(&sa.actions, err.fds[1], STDERR_FILENO);
  }

  pid_t pid = 0;
  auto start = std::chrono::steady_clock::now();
  exec.spawned_at = std::chrono::system_clock::now();
  int rc = ::posix_spawnp(&pid, cargs[0], &sa.actions, nullptr, cargs.data(), environ);
  if (rc != 0) {
    throw Error(Errc::SpawnFailure, args[0] + ": " + std::strerror(rc));
  }
  out.close_write();
  err.close_write();
  if (options_.capture) drain(out, err, exec, options_.echo);

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw Error(Errc::SpawnFailure, "waitpid failed");
  }
  exec.duration_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (WIFEXITED(status)) {
    exec.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    exec.exit_code = 128 + WTERMSIG(status);
  }
  return exec;
}

std::vector<FixtureRule> parse_fixture_table(std::string_view text,
                                             const std::filesystem::path& base_dir) {
  std::vector<FixtureRule> rules;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    auto line = trim_right(raw);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split(line, '\t');
    auto where = "fixture line " + std::to_string(lineno);
    if (fields.size() != 4 || fields[0].empty()) {
      throw Error(Errc::InvalidFixture, where + ": expected 4 tab-separated fields");
    }
    auto code = parse_int(fields[1]);
    auto duration = parse_double(fields[2]);
    if (!code || !duration || *duration < 0) {
      throw Error(Errc::InvalidFixture, where + ": bad exit code or duration");
    }
    FixtureRule rule{fields[0], static_cast<int>(*code), *duration, {}};
    auto file = std::string(trim(fields[3]));
    if (!file.empty() && file != "-") {
      try {
        rule.stdout_text = read_file(base_dir / file);
      } catch (const Error&) {
        throw Error(Errc::InvalidFixture, where + ": cannot read " + file);
      }
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

MockExecutor MockExecutor::from_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    throw Error(Errc::InvalidFixture, "cannot read fixture table " + path.string());
  }
  return MockExecutor(parse_fixture_table(text, path.parent_path()));
}

Execution MockExecutor::execute(std::span<const std::string> argv) {
  Execution exec;
  exec.argv.assign(argv.begin(), argv.end());
  exec.spawned_at = std::chrono::system_clock::now();
  auto joined = join(exec.argv, " ");
  exec.exit_code = 0;
  exec.unmatched = true;
  for (const auto& rule : rules_) {
    if (::fnmatch(rule.pattern.c_str(), joined.c_str(), 0) == 0) {
      exec.exit_code = rule.exit_code;
      exec.duration_s = rule.duration_s;
      exec.stdout_text = rule.stdout_text;
      exec.unmatched = false;
      break;
    }
  }
  history_.push_back(exec);
  return exec;
}

}  // namespace crucible::launch
