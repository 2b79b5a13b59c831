#include "crucible/bench/timing.hpp"

#include <cmath>
#include <tuple>

#include "crucible/error.hpp"
#include "crucible/util.hpp"

namespace crucible::bench {

namespace {

std::optional<double> finite(std::string_view s) {
  auto v = parse_double(s);
  if (!v || !std::isfinite(*v)) return std::nullopt;
  return v;
}

[[noreturn]] void bad_records(int lineno, const std::string& what) {
  throw Error(Errc::InvalidRecords, "line " + std::to_string(lineno) + ": " + what);
}

}  // namespace

bool reserved_phase(std::string_view name) {
  return name == kOtherPhase || name == kTotalPhase || name == kFailedPhase;
}

ParsedTimings parse_timings(std::string_view output) {
  ParsedTimings out;
  std::optional<double> total;
  bool any = false;
  for (const auto& line : split(output, '\n')) {
    auto tok = split_whitespace(line);
    if (tok.size() == 3 && tok[0] == "TIMING") {
      auto v = finite(tok[2]);
      if (!v) continue;
      if (*v < 0) throw Error(Errc::NegativeTiming, tok[1] + " " + tok[2]);
      if (reserved_phase(tok[1])) {
        throw Error(Errc::InconsistentTiming, "reserved phase name " + tok[1]);
      }
      out.phases[tok[1]] += *v;
      any = true;
    } else if (tok.size() == 2 && tok[0] == "TOTAL") {
      auto v = finite(tok[1]);
      if (!v) continue;
      if (*v < 0) throw Error(Errc::NegativeTiming, "TOTAL " + tok[1]);
      total = *v;
    }
  }
  if (!any) throw Error(Errc::NoTimingsFound, "no TIMING lines in output");
  double sum = 0.0;
  for (const auto& [_, v] : out.phases) sum += v;
  out.total = total.value_or(sum);
  double eps = 1e-9 * std::max(1.0, sum);
  if (out.total < sum - eps) {
    throw Error(Errc::InconsistentTiming, "TOTAL " + format_g(out.total, 6) +
                                              " is below the phase sum " + format_g(sum, 6));
  }
  out.phases[std::string(kOtherPhase)] = std::max(0.0, out.total - sum);
  return out;
}

std::vector<std::string> missing_phases(const ParsedTimings& parsed,
                                        const std::vector<std::string>& expected) {
  std::vector<std::string> out;
  for (const auto& p : expected) {
    if (!parsed.phases.count(p)) out.push_back(p);
  }
  return out;
}

std::string serialize_records(const std::vector<TimingRecord>& records) {
  std::string out = "# workload\tplatform\tnprocs\trun_index\tphase\tseconds\n";
  for (const auto& r : records) {
    auto prefix = r.workload + "\t" + r.platform + "\t" + std::to_string(r.nprocs) + "\t" +
                  std::to_string(r.run_index) + "\t";
    if (r.failed) {
      out += prefix + std::string(kFailedPhase) + "\t" + std::to_string(r.exit_code) + "\n";
      continue;
    }
    for (const auto& [phase, v] : r.phase_seconds) {
      out += prefix + phase + "\t" + format_exact(v) + "\n";
    }
    out += prefix + std::string(kTotalPhase) + "\t" + format_exact(r.total_seconds) + "\n";
  }
  return out;
}

std::vector<TimingRecord> parse_records(std::string_view text) {
  std::vector<TimingRecord> out;
  bool open = false;  // last record still accepting phase rows
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    auto line = trim_right(raw);
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    if (f.size() != 6) bad_records(lineno, "expected 6 tab-separated fields");
    auto nprocs = parse_int(f[2]);
    auto run = parse_int(f[3]);
    if (f[0].empty() || f[1].empty() || f[4].empty() || !nprocs || *nprocs < 1 || !run ||
        *run < 0) {
      bad_records(lineno, "bad key fields");
    }
    auto key = std::tie(f[0], f[1]);
    bool same = open && !out.empty() && std::tie(out.back().workload, out.back().platform) == key &&
                out.back().nprocs == *nprocs && out.back().run_index == *run;
    if (!same) {
      if (open) bad_records(lineno, "previous record has no total row");
      TimingRecord r;
      r.workload = f[0];
      r.platform = f[1];
      r.nprocs = static_cast<int>(*nprocs);
      r.run_index = static_cast<int>(*run);
      out.push_back(std::move(r));
      open = true;
    }
    auto& rec = out.back();
    if (f[4] == kFailedPhase) {
      auto code = parse_int(f[5]);
      if (same || !code) bad_records(lineno, "failed row must stand alone");
      rec.failed = true;
      rec.exit_code = static_cast<int>(*code);
      open = false;
      continue;
    }
    auto v = finite(f[5]);
    if (!v || *v < 0) bad_records(lineno, "bad seconds value");
    if (f[4] == kTotalPhase) {
      rec.total_seconds = *v;
      open = false;
    } else {
      if (!rec.phase_seconds.emplace(f[4], *v).second) bad_records(lineno, "duplicate phase");
    }
  }
  if (open) throw Error(Errc::InvalidRecords, "last record has no total row");
  return out;
}

}  // namespace crucible::bench
