#include "crucible/bench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "crucible/error.hpp"
#include "crucible/util.hpp"

namespace crucible::bench {

namespace {

struct RunKey {
  std::string workload;
  std::string platform;
  int nprocs;
  friend auto operator<=>(const RunKey&, const RunKey&) = default;
};

std::string describe(const RunKey& k) {
  return k.workload + "/" + k.platform + "/" + std::to_string(k.nprocs);
}

PhaseStats summarize(std::vector<double> xs) {
  // Sorting fixes the summation order, so the result does not depend on
  // the order the records arrived in.
  std::sort(xs.begin(), xs.end());
  PhaseStats s;
  s.n = static_cast<int>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sample_std = std::sqrt(ss / (s.n - 1));
    s.std_error = s.sample_std / std::sqrt(static_cast<double>(s.n));
  }
  return s;
}

}  // namespace

StatsTable aggregate(const std::vector<TimingRecord>& records) {
  if (records.empty()) throw Error(Errc::NoRecords, "no timing records");
  std::map<RunKey, std::map<std::string, std::vector<double>>> samples;
  std::map<RunKey, int> failed;
  for (const auto& r : records) {
    RunKey key{r.workload, r.platform, r.nprocs};
    if (r.failed) {
      ++failed[key];
      samples[key];
      continue;
    }
    auto& by_phase = samples[key];
    for (const auto& [phase, v] : r.phase_seconds) by_phase[phase].push_back(v);
    by_phase[std::string(kTotalPhase)].push_back(r.total_seconds);
  }
  StatsTable out;
  for (auto& [key, by_phase] : samples) {
    if (by_phase.empty()) throw Error(Errc::AllRunsFailed, describe(key));
    int excluded = failed.count(key) ? failed[key] : 0;
    for (auto& [phase, xs] : by_phase) {
      auto s = summarize(std::move(xs));
      s.excluded = excluded;
      out.emplace(StatsKey{key.workload, key.platform, key.nprocs, phase}, s);
    }
  }
  return out;
}

std::vector<Differential> differential(const StatsTable& stats,
                                       const std::string& baseline_label) {
  std::map<std::pair<std::string, int>, double> baseline;
  for (const auto& [k, s] : stats) {
    if (k.phase == kTotalPhase && k.platform == baseline_label) {
      baseline[{k.workload, k.nprocs}] = s.mean;
    }
  }
  std::vector<Differential> out;
  for (const auto& [k, s] : stats) {
    if (k.phase != kTotalPhase) continue;
    auto it = baseline.find({k.workload, k.nprocs});
    if (it == baseline.end()) {
      throw Error(Errc::MissingBaseline,
                  baseline_label + " has no " + k.workload + " run at nprocs " +
                      std::to_string(k.nprocs));
    }
    if (!(it->second > 0.0)) {
      throw Error(Errc::DegenerateBaseline,
                  k.workload + " at nprocs " + std::to_string(k.nprocs) +
                      " has baseline mean " + format_g(it->second, 6));
    }
    Differential d{k.workload, k.platform, k.nprocs, 0.0, s.mean, it->second};
    if (k.platform != baseline_label) d.percent = 100.0 * (s.mean - it->second) / it->second;
    out.push_back(d);
  }
  std::sort(out.begin(), out.end(), [](const Differential& a, const Differential& b) {
    return std::tie(a.workload, a.nprocs, a.platform) <
           std::tie(b.workload, b.nprocs, b.platform);
  });
  return out;
}

std::vector<Verdict> regression_check(const std::vector<Differential>& diffs,
                                      double threshold_percent,
                                      const std::map<std::string, double>& overrides) {
  auto check = [](double t, const std::string& what) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw Error(Errc::InvalidThreshold, what + " must be positive, got " + format_g(t, 6));
    }
  };
  check(threshold_percent, "threshold");
  for (const auto& [label, t] : overrides) check(t, "threshold for " + label);
  std::vector<Verdict> out;
  out.reserve(diffs.size());
  for (const auto& d : diffs) {
    auto it = overrides.find(d.platform);
    double t = it == overrides.end() ? threshold_percent : it->second;
    out.push_back({d, t, !(d.percent > t)});
  }
  return out;
}

}  // namespace crucible::bench
