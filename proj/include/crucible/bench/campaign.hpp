#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crucible/bench/timing.hpp"
#include "crucible/hpc/inject.hpp"
#include "crucible/launch/executor.hpp"
#include "crucible/launch/launch_spec.hpp"

namespace crucible::bench {

struct Workload {
  std::string name;
  std::vector<std::string> command;
  std::vector<std::string> phases;
  int warmup_runs = 1;
};

struct Platform {
  std::string label;
  launch::Backend backend;
  bool baseline = false;
  hpc::JobMode mode = hpc::JobMode::HostLaunch;
  std::optional<hpc::InjectionManifest> manifest;
};

enum class ExecutorKind { Real, Mock };

struct Campaign {
  std::string name;
  std::string image;
  ExecutorKind executor = ExecutorKind::Mock;
  std::filesystem::path model_path;  // mock only, resolved against the campaign file
  std::uint64_t seed = 0;
  int repetitions = 1;
  std::vector<int> proc_counts{1};
  hpc::Scheduler scheduler = hpc::Scheduler::None;
  std::vector<Workload> workloads;
  std::vector<Platform> platforms;

  const Platform& baseline() const;
};

/// Parses the JSON campaign document described in docs/campaign-schema.md.
/// Relative paths resolve against `base_dir`. Throws InvalidCampaign (and
/// InvalidManifest for referenced manifests).
Campaign parse_campaign(std::string_view json_text, const std::filesystem::path& base_dir);
Campaign load_campaign(const std::filesystem::path& path);

/// Checks the campaign invariants; throws InvalidCampaign.
void validate(const Campaign& campaign);

/// The argument vector for one run of `w` on `p` with `nprocs` processes,
/// plus any warning records from the HPC planner.
hpc::JobPlan run_command(const Campaign& c, const Workload& w, const Platform& p, int nprocs);

// Synthetic timing model for the mock executor. Expected seconds for a
// (workload, platform, nprocs, phase) are
//   base[workload][phase] * platform_factor[platform]
//     * (phase_nprocs_factor[phase][nprocs] or nprocs_factor[nprocs])
//     * product of matching adjust factors
// and each run perturbs that value by at most +/- noise (relative).
class MockModel {
 public:
  struct Adjust {
    std::optional<std::string> workload;
    std::optional<std::string> platform;
    std::optional<std::string> phase;
    std::optional<int> nprocs;
    double factor = 1.0;
  };

  /// Throws InvalidModel.
  static MockModel parse(std::string_view json_text);
  static MockModel load(const std::filesystem::path& path);

  /// Model mean; throws InvalidModel when the workload has no base entry.
  double expected(const std::string& workload, const std::string& platform, int nprocs,
                  const std::string& phase) const;
  double noise_for(const std::string& platform) const;
  std::vector<std::string> phases_for(const std::string& workload) const;

 private:
  double noise_ = 0.01;
  std::map<std::string, double> noise_by_platform_;
  std::map<std::string, std::map<std::string, double>> base_;
  std::map<std::string, double> platform_factor_;
  std::map<int, double> nprocs_factor_;
  std::map<std::string, std::map<int, double>> phase_nprocs_factor_;
  std::vector<Adjust> adjust_;
};

struct RunContext {
  const Workload& workload;
  const Platform& platform;
  int nprocs;
  int run_index;  // negative for warmup runs
};

class RunExecutor {
 public:
  virtual ~RunExecutor() = default;
  virtual launch::Execution run(const std::vector<std::string>& argv,
                                const RunContext& ctx) = 0;
};

// Runs the synthesized command through a launch executor.
class CommandRunExecutor : public RunExecutor {
 public:
  explicit CommandRunExecutor(launch::Executor& executor) : executor_(executor) {}
  launch::Execution run(const std::vector<std::string>& argv, const RunContext& ctx) override;

 private:
  launch::Executor& executor_;
};

// Answers every run from the mock model without spawning anything.
//
// Noise is balanced: for each (workload, platform, nprocs, phase) the
// `repetitions` runs receive a seeded permutation of evenly spaced offsets
// in [-noise, +noise] that sum to zero, so the sample mean reproduces the
// model value while the spread stays deterministic.
class ModelRunExecutor : public RunExecutor {
 public:
  ModelRunExecutor(MockModel model, std::uint64_t seed, int repetitions)
      : model_(std::move(model)), seed_(seed), repetitions_(repetitions) {}

  launch::Execution run(const std::vector<std::string>& argv, const RunContext& ctx) override;

  /// Relative offset in [-1, 1] applied (times noise) to run `run_index`.
  double offset(const std::string& workload, const std::string& platform, int nprocs,
                const std::string& phase, int run_index) const;

 private:
  MockModel model_;
  std::uint64_t seed_;
  int repetitions_;
};

struct CampaignResult {
  std::vector<TimingRecord> records;
  std::vector<std::string> warnings;
  int runs_executed = 0;  // including warmups
};

/// Runs every (workload, platform, nprocs) cell in that nesting order:
/// warmups first, then `repetitions` recorded runs, strictly one at a time.
/// A nonzero exit or unusable output yields a record flagged failed.
CampaignResult run_campaign(const Campaign& campaign, RunExecutor& executor);

}  // namespace crucible::bench
