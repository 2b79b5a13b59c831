#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace crucible::bench {

// Phase names the tool derives itself; workloads may not emit them.
inline constexpr std::string_view kOtherPhase = "other";
inline constexpr std::string_view kTotalPhase = "total";
inline constexpr std::string_view kFailedPhase = "failed";

bool reserved_phase(std::string_view name);

struct ParsedTimings {
  std::map<std::string, double> phases;  // includes "other"
  double total = 0.0;
};

/// Reads `TIMING <phase> <seconds>` and `TOTAL <seconds>` lines; all other
/// lines are ignored. Repeated phases are summed, the last TOTAL wins and a
/// missing TOTAL means the sum of the phases. "other" receives
/// max(0, total - sum).
///
/// Throws NoTimingsFound, NegativeTiming, and InconsistentTiming when TOTAL
/// is below the phase sum or a reserved phase name is emitted.
ParsedTimings parse_timings(std::string_view output);

/// Names from `expected` that `parsed` lacks.
std::vector<std::string> missing_phases(const ParsedTimings& parsed,
                                        const std::vector<std::string>& expected);

struct TimingRecord {
  std::string workload;
  std::string platform;
  int nprocs = 1;
  int run_index = 0;
  std::map<std::string, double> phase_seconds;  // includes "other"
  double total_seconds = 0.0;
  bool failed = false;
  int exit_code = 0;     // meaningful when failed; -1 for unparseable output
  std::string failure;   // diagnostic, not serialized

  friend bool operator==(const TimingRecord& a, const TimingRecord& b) {
    return a.workload == b.workload && a.platform == b.platform && a.nprocs == b.nprocs &&
           a.run_index == b.run_index && a.phase_seconds == b.phase_seconds &&
           a.total_seconds == b.total_seconds && a.failed == b.failed &&
           a.exit_code == b.exit_code;
  }
};

/// One line per phase: workload, platform, nprocs, run_index, phase,
/// seconds (tab-separated). Each record ends with its "total" row; failed
/// runs are a single "failed" row carrying the exit code. Values are written
/// in shortest round-trip form.
std::string serialize_records(const std::vector<TimingRecord>& records);

/// Inverse of serialize_records; lines starting with '#' are skipped.
/// Throws InvalidRecords.
std::vector<TimingRecord> parse_records(std::string_view text);

}  // namespace crucible::bench
