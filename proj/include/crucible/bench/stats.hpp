#pragma once

#include <compare>
#include <map>
#include <string>
#include <vector>

#include "crucible/bench/timing.hpp"

namespace crucible::bench {

struct StatsKey {
  std::string workload;
  std::string platform;
  int nprocs = 1;
  std::string phase;
  friend auto operator<=>(const StatsKey&, const StatsKey&) = default;
};

struct PhaseStats {
  double mean = 0.0;
  double sample_std = 0.0;  // n-1 denominator, 0 when n == 1
  double std_error = 0.0;   // sample_std / sqrt(n)
  int n = 0;
  int excluded = 0;  // failed runs left out of this key
};

using StatsTable = std::map<StatsKey, PhaseStats>;

/// Mean, sample std and standard error for every (workload, platform,
/// nprocs, phase) including "other" and "total". Result is independent of
/// record order. Throws NoRecords and AllRunsFailed.
StatsTable aggregate(const std::vector<TimingRecord>& records);

struct Differential {
  std::string workload;
  std::string platform;
  int nprocs = 1;
  double percent = 0.0;
  double mean_total = 0.0;
  double baseline_total = 0.0;
};

/// 100 * (mean_total - baseline) / baseline per (workload, platform,
/// nprocs), sorted by workload, nprocs, platform. Baseline rows are exactly
/// zero. Throws MissingBaseline and DegenerateBaseline (zero baseline mean).
std::vector<Differential> differential(const StatsTable& stats,
                                       const std::string& baseline_label);

struct Verdict {
  Differential diff;
  double threshold = 0.0;
  bool passed = true;
};

/// Fails a row iff its percent exceeds the threshold for its platform.
/// Throws InvalidThreshold for non-positive thresholds.
std::vector<Verdict> regression_check(const std::vector<Differential>& diffs,
                                      double threshold_percent,
                                      const std::map<std::string, double>& overrides = {});

}  // namespace crucible::bench
