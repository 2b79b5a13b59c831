#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crucible/bench/stats.hpp"

namespace crucible::report {

// ---- CSV ----

inline constexpr std::string_view kCsvHeader =
    "workload,platform,nprocs,phase,mean_s,std_s,stderr_s,n";

/// CSV text for a non-empty table: rows sorted by (workload, nprocs,
/// platform, phase), numbers as %.6g, LF endings. Throws NoRecords.
std::string csv_text(const bench::StatsTable& stats);
void emit_csv(const bench::StatsTable& stats, const std::filesystem::path& path);

/// Reads csv_text output back. Throws InvalidCsv.
bench::StatsTable parse_csv(std::string_view text);

// ---- plot data ----

enum class PlotKind { GroupedBars, StackedBars };
enum class GroupKey { Nprocs, Platform };

PlotKind parse_plot_kind(std::string_view s);  // "grouped" | "stacked"
GroupKey parse_group_key(std::string_view s);  // "nprocs" | "platform"

// Groups are (workload, group key value). With GroupKey::Nprocs the bars in
// a group are the platforms, which gives the workstation figure (one group
// per benchmark) and the Edison figure (one group per process count). With
// GroupKey::Platform the bars are the process counts.
struct PlotSpec {
  PlotKind kind = PlotKind::GroupedBars;
  GroupKey group_key = GroupKey::Nprocs;
  std::vector<std::string> segments;  // stacked: phases in stack order
  bool error_bars = true;
  std::optional<double> axis_cap;       // bars above it are flagged "truncated"
  std::optional<std::string> workload;  // restrict to one workload
};

/// Plain-text plot data: comment header, then per group a `[label]` line
/// followed by `bar value error` rows (`bar:phase` for stacked bars), groups
/// separated by a blank line. Throws InconsistentSpec.
std::string plot_text(const bench::StatsTable& stats, const PlotSpec& spec);
void emit_plot_data(const bench::StatsTable& stats, const PlotSpec& spec,
                    const std::filesystem::path& path);

// ---- terminal summary ----

/// Aligned table of total-time differentials with verdicts, one row per
/// differential in the order given.
std::string render_summary(const bench::StatsTable& stats,
                           const std::vector<bench::Differential>& diffs,
                           const std::vector<bench::Verdict>& verdicts);

}  // namespace crucible::report
