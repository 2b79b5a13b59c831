#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crucible::launch {

struct Execution {
  std::vector<std::string> argv;
  std::chrono::system_clock::time_point spawned_at;
  std::optional<int> exit_code;  // set once the process has ended
  std::string stdout_text;
  std::string stderr_text;
  double duration_s = 0.0;
  bool unmatched = false;  // mock only: no fixture rule matched

  bool succeeded() const { return exit_code && *exit_code == 0; }
};

class Executor {
 public:
  virtual ~Executor() = default;
  /// Runs `argv` to completion. `argv` must be non-empty.
  virtual Execution execute(std::span<const std::string> argv) = 0;
};

// Spawns real processes. `$(pwd)` inside arguments is replaced by the current
// working directory before exec.
class ProcessExecutor : public Executor {
 public:
  struct Options {
    bool capture = true;  // false: child inherits stdio (interactive sessions)
    bool echo = false;    // copy captured output to our stdout/stderr as it arrives
  };

  ProcessExecutor() = default;
  explicit ProcessExecutor(Options options) : options_(options) {}

  /// Throws Error(SpawnFailure) when the program cannot be started.
  Execution execute(std::span<const std::string> argv) override;

 private:
  Options options_;
};

struct FixtureRule {
  std::string pattern;  // glob over the space-joined argv
  int exit_code = 0;
  double duration_s = 0.0;
  std::string stdout_text;
};

/// Parses `pattern<TAB>exit_code<TAB>duration_s<TAB>stdout_file` records.
/// `stdout_file` is relative to `base_dir`; `-` or empty means no output.
/// Throws Error(InvalidFixture).
std::vector<FixtureRule> parse_fixture_table(std::string_view text,
                                             const std::filesystem::path& base_dir);

// Scripted executor. Never touches the system: fixture output is read once
// at construction and the first matching rule answers each call. Calls that
// match nothing succeed with empty output and `unmatched` set.
class MockExecutor : public Executor {
 public:
  explicit MockExecutor(std::vector<FixtureRule> rules = {}) : rules_(std::move(rules)) {}
  static MockExecutor from_file(const std::filesystem::path& path);

  Execution execute(std::span<const std::string> argv) override;

  const std::vector<Execution>& history() const { return history_; }

 private:
  std::vector<FixtureRule> rules_;
  std::vector<Execution> history_;
};

}  // namespace crucible::launch
