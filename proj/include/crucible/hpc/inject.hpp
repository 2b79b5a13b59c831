#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crucible/launch/launch_spec.hpp"

namespace crucible::hpc {

struct AbiFamily {
  std::string name;
  std::set<std::string> members;
};

/// Table shipped with the tool: `family<TAB>implementation` records.
extern const std::string_view kDefaultAbiTable;

// Disjoint families of ABI-compatible MPI implementations.
class AbiTable {
 public:
  /// Throws InvalidAbiTable on malformed records or overlapping families.
  static AbiTable parse(std::string_view text);
  static AbiTable load(const std::filesystem::path& path);
  static const AbiTable& builtin();

  std::optional<std::string> family_of(std::string_view impl) const;
  const std::vector<AbiFamily>& families() const { return families_; }

 private:
  std::vector<AbiFamily> families_;
};

struct AbiCheck {
  bool compatible = false;
  std::string family;  // shared family when compatible
  std::string container_family;
  std::string host_family;
};

/// Throws UnknownImplementation when either name is missing from `table`.
AbiCheck check_abi(std::string_view container_impl, std::string_view host_impl,
                   const AbiTable& table);

struct InjectionManifest {
  std::string host_lib_dir;
  std::string staged_dir;  // may reference $VARS, kept verbatim in job lines
  std::vector<std::string> libraries;
  std::string env_var = "LD_LIBRARY_PATH";
  std::string host_impl;
  std::string container_impl;
};

/// JSON object with the fields of InjectionManifest. Throws InvalidManifest.
InjectionManifest parse_manifest(std::string_view json_text);
InjectionManifest load_manifest(const std::filesystem::path& path);

struct CopyStep {
  std::filesystem::path source;
  std::filesystem::path destination;
  friend bool operator==(const CopyStep&, const CopyStep&) = default;
};

/// Copies needed to bring the staged directory up to date: a library is
/// listed when its staged copy is missing or differs in size or SHA-256.
/// Throws MissingLibrary, InvalidManifest (unset variable in a path).
std::vector<CopyStep> plan_staging(const InjectionManifest& manifest);

/// Executes the current plan under the staged directory's lock and returns
/// the copies made. Throws StageDirUnwritable plus plan_staging's errors.
std::vector<CopyStep> apply_staging(const InjectionManifest& manifest,
                                    int lock_timeout_ms = 5000);

enum class Scheduler { SlurmSrun, Mpirun, None };
enum class JobMode { HostLaunch, InsideContainer };

std::string_view to_string(Scheduler s) noexcept;
std::string_view to_string(JobMode m) noexcept;
/// Throws InvalidJob.
Scheduler parse_scheduler(std::string_view s);
JobMode parse_job_mode(std::string_view s);

struct JobRequest {
  launch::LaunchSpec spec;
  launch::Backend backend{launch::BackendKind::Shifter, {}};
  int nprocs = 1;
  std::optional<InjectionManifest> manifest;
  Scheduler scheduler = Scheduler::SlurmSrun;
  JobMode mode = JobMode::HostLaunch;
};

inline constexpr std::string_view kContainerMpiFallback = "container-MPI fallback";

struct WarningRecord {
  std::string code;
  std::string detail;
  friend bool operator==(const WarningRecord&, const WarningRecord&) = default;
};

struct JobPlan {
  std::vector<std::string> argv;
  std::vector<WarningRecord> warnings;
};

/// Renders the full job command line.
///
/// host-launch, shifter:  [srun|mpirun -n N] shifter [env VAR=DIR [N=V]...]
///                        --image=docker:REF CMD...
/// host-launch, native:   [srun|mpirun -n N] CMD...
/// inside-container:      the backend's run command with inner command
///                        `mpirun -n N CMD...`
///
/// Throws IncompatibleAbi, UnsupportedBackend, InvalidJob and the launch
/// module's errors.
JobPlan plan_hpc_job(const JobRequest& request,
                     const AbiTable& table = AbiTable::builtin());

}  // namespace crucible::hpc
