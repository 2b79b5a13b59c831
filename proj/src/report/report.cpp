#include "crucible/report/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "crucible/error.hpp"
#include "crucible/util.hpp"

namespace crucible::report {

using bench::PhaseStats;
using bench::StatsKey;
using bench::StatsTable;

namespace {

bool csv_row_less(const StatsKey& a, const StatsKey& b) {
  return std::tie(a.workload, a.nprocs, a.platform, a.phase) <
         std::tie(b.workload, b.nprocs, b.platform, b.phase);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

[[noreturn]] void bad_csv(int line, const std::string& what) {
  throw Error(Errc::InvalidCsv, "line " + std::to_string(line) + ": " + what);
}

// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> csv_fields(std::string_view line, int line_no) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"' && out.back().empty()) {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) bad_csv(line_no, "unterminated quote");
  return out;
}

std::string num(double v) { return format_g(v, 6); }

[[noreturn]] void inconsistent(const std::string& what) {
  throw Error(Errc::InconsistentSpec, what);
}

}  // namespace

std::string csv_text(const StatsTable& stats) {
  if (stats.empty()) throw Error(Errc::NoRecords, "statistics table is empty");
  std::vector<const StatsTable::value_type*> rows;
  for (const auto& entry : stats) rows.push_back(&entry);
  std::sort(rows.begin(), rows.end(),
            [](auto* a, auto* b) { return csv_row_less(a->first, b->first); });
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto* row : rows) {
    const auto& [k, s] = *row;
    out += csv_field(k.workload) + ',' + csv_field(k.platform) + ',' +
           std::to_string(k.nprocs) + ',' + csv_field(k.phase) + ',' + num(s.mean) + ',' +
           num(s.sample_std) + ',' + num(s.std_error) + ',' + std::to_string(s.n) + '\n';
  }
  return out;
}

void emit_csv(const StatsTable& stats, const std::filesystem::path& path) {
  write_file_atomic(path, csv_text(stats), Errc::WriteFailure);
}

StatsTable parse_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines.front() != kCsvHeader) bad_csv(1, "missing header");
  StatsTable out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    int line_no = static_cast<int>(i) + 1;
    auto f = csv_fields(lines[i], line_no);
    if (f.size() != 8) bad_csv(line_no, "expected 8 fields");
    auto nprocs = parse_int(f[2]);
    auto n = parse_int(f[7]);
    auto mean = parse_double(f[4]), sd = parse_double(f[5]), se = parse_double(f[6]);
    if (!nprocs || *nprocs < 1) bad_csv(line_no, "bad nprocs '" + f[2] + "'");
    if (!n || *n < 1) bad_csv(line_no, "bad n '" + f[7] + "'");
    if (!mean || !sd || !se) bad_csv(line_no, "bad number");
    StatsKey key{f[0], f[1], static_cast<int>(*nprocs), f[3]};
    PhaseStats s;
    s.mean = *mean;
    s.sample_std = *sd;
    s.std_error = *se;
    s.n = static_cast<int>(*n);
    if (!out.emplace(key, s).second) bad_csv(line_no, "duplicate row");
  }
  return out;
}

PlotKind parse_plot_kind(std::string_view s) {
  if (s == "grouped") return PlotKind::GroupedBars;
  if (s == "stacked") return PlotKind::StackedBars;
  inconsistent("unknown layout '" + std::string(s) + "' (grouped or stacked)");
}

GroupKey parse_group_key(std::string_view s) {
  if (s == "nprocs") return GroupKey::Nprocs;
  if (s == "platform") return GroupKey::Platform;
  inconsistent("unknown group key '" + std::string(s) + "' (nprocs or platform)");
}

std::string plot_text(const StatsTable& stats, const PlotSpec& spec) {
  bool stacked = spec.kind == PlotKind::StackedBars;
  std::vector<std::string> segments = spec.segments;
  if (stacked && segments.empty()) inconsistent("stacked bars need at least one phase");
  if (!stacked) {
    if (!segments.empty() && segments != std::vector<std::string>{std::string(bench::kTotalPhase)}) {
      inconsistent("grouped bars show the total phase only");
    }
    segments = {std::string(bench::kTotalPhase)};
  }
  if (std::set<std::string>(segments.begin(), segments.end()).size() != segments.size()) {
    inconsistent("duplicate phase in stack");
  }
  if (spec.axis_cap && !(*spec.axis_cap > 0.0)) inconsistent("axis cap must be positive");

  struct Bar {
    std::string label;
    StatsKey key;
  };
  // Group ordering: workload, then the group key value.
  using GroupId = std::tuple<std::string, int, std::string>;
  std::map<GroupId, std::vector<Bar>> by_group;
  std::set<std::tuple<std::string, std::string, int>> seen;
  for (const auto& [k, s] : stats) {
    if (spec.workload && k.workload != *spec.workload) continue;
    if (!seen.insert({k.workload, k.platform, k.nprocs}).second) continue;
    StatsKey bar_key{k.workload, k.platform, k.nprocs, ""};
    if (spec.group_key == GroupKey::Nprocs) {
      by_group[{k.workload, k.nprocs, ""}].push_back({k.platform, bar_key});
    } else {
      by_group[{k.workload, 0, k.platform}].push_back({std::to_string(k.nprocs), bar_key});
    }
  }
  if (by_group.empty()) {
    inconsistent(spec.workload ? "no statistics for workload '" + *spec.workload + "'"
                               : std::string("no statistics to plot"));
  }

  std::string out = "# crucible plot data\n# layout: ";
  out += stacked ? "stacked" : "grouped";
  out += ", group key: ";
  out += spec.group_key == GroupKey::Nprocs ? "nprocs" : "platform";
  out += ", error: ";
  out += spec.error_bars ? "stderr_s" : "none";
  if (spec.axis_cap) out += ", axis cap: " + num(*spec.axis_cap);
  out += "\n# columns: label value error\n";

  bool first = true;
  for (auto& [g, bars] : by_group) {
    if (spec.group_key == GroupKey::Platform) {
      std::sort(bars.begin(), bars.end(),
                [](const Bar& a, const Bar& b) { return a.key.nprocs < b.key.nprocs; });
    }
    if (!first) out += '\n';
    first = false;
    const auto& [workload, nprocs, platform] = g;
    out += "[" + workload +
           (platform.empty() ? " nprocs=" + std::to_string(nprocs) : " platform=" + platform) +
           "]\n";
    for (const auto& bar : bars) {
      std::vector<const PhaseStats*> parts;
      double height = 0.0;
      for (const auto& seg : segments) {
        StatsKey key = bar.key;
        key.phase = seg;
        auto it = stats.find(key);
        if (it == stats.end()) {
          inconsistent("no '" + seg + "' phase for " + key.workload + "/" + key.platform +
                       "/" + std::to_string(key.nprocs));
        }
        parts.push_back(&it->second);
        height += it->second.mean;
      }
      bool truncated = spec.axis_cap && height > *spec.axis_cap;
      for (std::size_t i = 0; i < segments.size(); ++i) {
        std::string label = stacked ? bar.label + ":" + segments[i] : bar.label;
        out += label + ' ' + num(parts[i]->mean) + ' ' +
               (spec.error_bars ? num(parts[i]->std_error) : std::string("0"));
        if (truncated) out += " truncated";
        out += '\n';
      }
    }
  }
  return out;
}

void emit_plot_data(const StatsTable& stats, const PlotSpec& spec,
                    const std::filesystem::path& path) {
  write_file_atomic(path, plot_text(stats, spec), Errc::WriteFailure);
}

std::string render_summary(const StatsTable& stats,
                           const std::vector<bench::Differential>& diffs,
                           const std::vector<bench::Verdict>& verdicts) {
  std::map<std::tuple<std::string, std::string, int>, const bench::Verdict*> verdict_of;
  for (const auto& v : verdicts) verdict_of[{v.diff.workload, v.diff.platform, v.diff.nprocs}] = &v;

  std::vector<std::vector<std::string>> rows{
      {"WORKLOAD", "PLATFORM", "NPROCS", "MEAN_S", "STDERR_S", "N", "DIFF", "VERDICT"}};
  for (const auto& d : diffs) {
    std::string stderr_s = "-", n = "-";
    auto it = stats.find({d.workload, d.platform, d.nprocs, std::string(bench::kTotalPhase)});
    if (it != stats.end()) {
      stderr_s = num(it->second.std_error);
      n = std::to_string(it->second.n);
      if (it->second.excluded > 0) n += " (" + std::to_string(it->second.excluded) + " failed)";
    }
    char pct[48];
    std::snprintf(pct, sizeof pct, "%+.1f%%", d.percent);
    std::string verdict = "-";
    auto v = verdict_of.find({d.workload, d.platform, d.nprocs});
    if (v != verdict_of.end()) verdict = v->second->passed ? "PASS" : "FAIL";
    rows.push_back({d.workload, d.platform, std::to_string(d.nprocs), num(d.mean_total),
                    stderr_s, n, pct, verdict});
  }

  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      line += r[i];
      if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
    }
    out += line + '\n';
  }
  return out;
}

}  // namespace crucible::report
