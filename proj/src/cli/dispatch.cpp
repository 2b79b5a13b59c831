#include "crucible/cli/dispatch.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "CLI11.hpp"
#include "crucible/bench/campaign.hpp"
#include "crucible/bench/stats.hpp"
#include "crucible/bench/timing.hpp"
#include "crucible/cli/config.hpp"
#include "crucible/error.hpp"
#include "crucible/hpc/inject.hpp"
#include "crucible/image/recipe.hpp"
#include "crucible/image/store.hpp"
#include "crucible/launch/executor.hpp"
#include "crucible/launch/launch_spec.hpp"
#include "crucible/report/report.hpp"
#include "crucible/util.hpp"
#include "crucible/workflows/project.hpp"

namespace crucible::cli {

namespace {

namespace fs = std::filesystem;

// ---- argument holders ----

struct RunArgs {
  bool interactive = false;
  bool tty = false;
  bool detach = false;
  std::string workdir;
  std::string name;
  std::vector<std::string> volumes;
  std::vector<std::string> ports;
  std::vector<std::string> env;
  std::string backend;
  std::vector<std::string> backend_options;
  bool print = false;
  std::string mock;
};

struct ReportArgs {
  std::string csv;
  std::string plot;
  std::string layout = "grouped";
  std::string group_key = "nprocs";
  std::vector<std::string> segments;
  std::string workload;
  double axis_cap = 0.0;
  CLI::Option* axis_cap_opt = nullptr;
  bool no_error_bars = false;
  double threshold = 0.0;
  CLI::Option* threshold_opt = nullptr;
  std::vector<std::string> overrides;
};

void add_run_options(CLI::App* sub, RunArgs& a) {
  sub->add_flag("-i,--interactive", a.interactive, "Keep stdin open and allocate a terminal");
  sub->add_flag("-t,--tty", a.tty, "Same as --interactive (accepts docker's -ti)");
  sub->add_flag("-d,--detach", a.detach, "Run in the background");
  sub->add_option("-w,--workdir", a.workdir, "Working directory inside the container");
  sub->add_option("--name", a.name, "Container name");
  sub->add_option("-v,--volume", a.volumes, "Bind mount HOST:CONTAINER")->allow_extra_args(false);
  sub->add_option("-p,--publish", a.ports, "Port mapping [IP:]HOST:CONTAINER")
      ->allow_extra_args(false);
  sub->add_option("-e,--env", a.env, "Environment variable NAME=VALUE")->allow_extra_args(false);
  sub->add_option("-b,--backend", a.backend, "docker, rkt, shifter, native or mock");
  sub->add_option("--backend-option", a.backend_options, "Backend option KEY=VALUE")
      ->allow_extra_args(false);
  sub->add_option("--mock", a.mock, "Fixture table answering mock backend calls");
  sub->prefix_command();
  sub->footer("Arguments after the options: IMAGE [COMMAND...]");
}

void add_report_options(CLI::App* sub, ReportArgs& a) {
  sub->add_option("--csv", a.csv, "Write per-phase statistics as CSV");
  sub->add_option("--plot", a.plot, "Write plot data");
  sub->add_option("--layout", a.layout, "Plot layout: grouped or stacked")
      ->check(CLI::IsMember({"grouped", "stacked"}));
  sub->add_option("--group-key", a.group_key, "Plot groups per nprocs or per platform")
      ->check(CLI::IsMember({"nprocs", "platform"}));
  sub->add_option("--segments", a.segments, "Stacked phases in order")->delimiter(',');
  sub->add_option("--workload", a.workload, "Plot only this workload");
  a.axis_cap_opt = sub->add_option("--axis-cap", a.axis_cap, "Flag bars taller than this");
  sub->add_flag("--no-error-bars", a.no_error_bars, "Print 0 instead of the standard error");
  a.threshold_opt =
      sub->add_option("-T,--threshold", a.threshold, "Regression threshold in percent");
  sub->add_option("--override", a.overrides, "Per-platform threshold LABEL=PERCENT")
      ->allow_extra_args(false);
}

// ---- small parsers ----

std::pair<std::string, std::string> split_pair(const std::string& s, char sep, Errc code,
                                               const std::string& what) {
  auto pos = s.find(sep);
  if (pos == std::string::npos || pos == 0) {
    throw Error(code, "expected " + what + ", got '" + s + "'");
  }
  return {s.substr(0, pos), s.substr(pos + 1)};
}

int port_number(const std::string& s, const std::string& whole) {
  auto v = parse_int(s);
  if (!v || *v < 1 || *v > 65535) {
    throw Error(Errc::InvalidLaunchSpec, "bad port in '" + whole + "'");
  }
  return static_cast<int>(*v);
}

launch::PortMapping parse_port(const std::string& s) {
  auto parts = split(s, ':');
  if (parts.size() == 2) return {"", port_number(parts[0], s), port_number(parts[1], s)};
  if (parts.size() == 3) return {parts[0], port_number(parts[1], s), port_number(parts[2], s)};
  throw Error(Errc::InvalidLaunchSpec, "expected [IP:]HOST:CONTAINER, got '" + s + "'");
}

std::map<std::string, std::string> parse_options(const std::vector<std::string>& kvs) {
  std::map<std::string, std::string> out;
  for (const auto& kv : kvs) {
    auto [k, v] = split_pair(kv, '=', Errc::InvalidLaunchSpec, "KEY=VALUE");
    out[k] = v;
  }
  return out;
}

std::map<std::string, double> parse_overrides(const std::vector<std::string>& kvs) {
  std::map<std::string, double> out;
  for (const auto& kv : kvs) {
    auto [label, t] = split_pair(kv, '=', Errc::InvalidThreshold, "LABEL=PERCENT");
    auto v = parse_double(t);
    if (!v) throw Error(Errc::InvalidThreshold, "bad threshold in '" + kv + "'");
    out[label] = *v;
  }
  return out;
}

void print_warnings(const std::vector<std::string>& warnings, std::ostream& err) {
  for (const auto& w : warnings) err << "warning: " << w << '\n';
}

// ---- command context ----

class Context {
 public:
  Context(std::ostream& out, std::ostream& err) : out(out), err(err) {}

  const Config& config() {
    if (!config_) config_ = load_config(config_path());
    return *config_;
  }

  std::unique_ptr<launch::Executor> executor(launch::BackendKind kind, const std::string& mock,
                                             launch::ProcessExecutor::Options opts) {
    if (kind == launch::BackendKind::Mock) {
      if (!mock.empty()) {
        return std::make_unique<launch::MockExecutor>(launch::MockExecutor::from_file(mock));
      }
      if (config().mock_fixture) {
        return std::make_unique<launch::MockExecutor>(
            launch::MockExecutor::from_file(*config().mock_fixture));
      }
      return std::make_unique<launch::MockExecutor>();
    }
    return std::make_unique<launch::ProcessExecutor>(opts);
  }

  bool image_resolvable(const std::string& ref) {
    auto store = image::Store::open(config().store_root);
    if (store.lookup_tag(ref)) return true;
    try {
      store.resolve_image(ref);
      return true;
    } catch (const Error&) {
    }
    return config().registry_path && image::registry_has(*config().registry_path, ref);
  }

  hpc::AbiTable abi_table(const std::string& flag) {
    if (!flag.empty()) return hpc::AbiTable::load(flag);
    if (config().abi_table_path) return hpc::AbiTable::load(*config().abi_table_path);
    return hpc::AbiTable::builtin();
  }

  std::ostream& out;
  std::ostream& err;

 private:
  std::optional<Config> config_;
};

// ---- image commands ----

int cmd_build(Context& ctx, const std::string& recipe_path, const std::string& tag) {
  auto recipe = image::parse_recipe(read_file(recipe_path));
  auto store = image::Store::open(ctx.config().store_root);
  auto result = image::build_image(recipe, store, ctx.config().registry_path);
  print_warnings(result.warnings, ctx.err);
  ctx.out << "built " << image::short_id(result.image.id) << " (" << result.new_layers
          << " new, " << result.reused_layers << " cached layers)\n";
  if (!tag.empty()) {
    image::tag_image(store, result.image.id, tag);
    ctx.out << "tagged " << tag << '\n';
  }
  return kExitOk;
}

int cmd_tag(Context& ctx, const std::string& ref, const std::string& name) {
  auto store = image::Store::open(ctx.config().store_root);
  auto id = image::tag_image(store, ref, name);
  ctx.out << "tagged " << name << " -> " << image::short_id(id) << '\n';
  return kExitOk;
}

std::string table_text(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += r[i];
      if (i + 1 < r.size()) out += std::string(width[i] - r[i].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

int cmd_images(Context& ctx) {
  auto store = image::Store::open(ctx.config().store_root);
  auto usage = image::store_usage(store);
  std::vector<std::vector<std::string>> rows{{"TAG", "IMAGE ID", "LAYERS", "SIZE"}};
  std::set<std::string> tagged;
  auto row = [&](const std::string& tag, const image::Image& img) {
    auto it = usage.per_image_logical_bytes.find(img.id);
    rows.push_back({tag, image::short_id(img.id), std::to_string(img.layers.size()),
                    std::to_string(it == usage.per_image_logical_bytes.end() ? 0 : it->second)});
  };
  for (const auto& [tag, id] : store.tags()) {
    if (const auto* img = store.find_image(id)) {
      row(tag, *img);
      tagged.insert(id);
    }
  }
  for (const auto& [id, img] : store.images()) {
    if (!tagged.count(id)) row("<none>", img);
  }
  ctx.out << table_text(rows);
  ctx.out << usage.distinct_layers << " layers, " << usage.total_bytes << " bytes stored, "
          << usage.shared_bytes << " bytes shared\n";
  return kExitOk;
}

int cmd_pull(Context& ctx, const std::string& ref, const std::string& registry_flag) {
  fs::path registry;
  if (!registry_flag.empty()) {
    registry = registry_flag;
  } else if (ctx.config().registry_path) {
    registry = *ctx.config().registry_path;
  } else {
    throw Error(Errc::InvalidConfig, "no registry_path configured; pass --registry");
  }
  auto store = image::Store::open(ctx.config().store_root);
  auto result = image::pull_image(registry, ref, store);
  ctx.out << "pulled " << image::parse_reference(ref).str() << ' '
          << image::short_id(result.image.id) << " (" << result.copied << " copied, "
          << result.skipped << " present)\n";
  return kExitOk;
}

// ---- launch ----

launch::LaunchSpec launch_spec_of(const RunArgs& a, const std::vector<std::string>& rest) {
  launch::LaunchSpec spec;
  std::vector<std::string> words = rest;
  if (!words.empty() && words.front() == "--") words.erase(words.begin());
  if (words.empty()) throw CLI::RequiredError("IMAGE");
  spec.image_ref = words.front();
  words.erase(words.begin());
  if (!words.empty() && words.front() == "--") words.erase(words.begin());
  if (!words.empty()) spec.command = words;
  spec.interactive = a.interactive || a.tty;
  spec.detach = a.detach;
  if (!a.name.empty()) spec.name = a.name;
  if (!a.workdir.empty()) spec.workdir = a.workdir;
  for (const auto& v : a.volumes) {
    auto [host, container] = split_pair(v, ':', Errc::InvalidLaunchSpec, "HOST:CONTAINER");
    spec.mounts.push_back({host, container});
  }
  for (const auto& p : a.ports) spec.ports.push_back(parse_port(p));
  for (const auto& e : a.env) {
    auto [n, v] = split_pair(e, '=', Errc::InvalidLaunchSpec, "NAME=VALUE");
    spec.env.push_back({n, v});
  }
  return spec;
}

int cmd_run(Context& ctx, const RunArgs& a, const std::vector<std::string>& rest,
            bool print_only) {
  auto spec = launch_spec_of(a, rest);
  auto kind = a.backend.empty() ? ctx.config().default_backend
                                : launch::parse_backend_kind(a.backend);
  auto backend = ctx.config().backend(kind);
  for (const auto& [k, v] : parse_options(a.backend_options)) backend.options[k] = v;
  auto rendered = launch::synthesize_command(spec, backend);
  print_warnings(rendered.warnings, ctx.err);
  if (print_only || a.print) {
    ctx.out << launch::shell_line(rendered.argv) << '\n';
    return kExitOk;
  }
  auto exec = ctx.executor(kind, a.mock, {.capture = false, .echo = false});
  auto result = exec->execute(rendered.argv);
  ctx.out << result.stdout_text;
  if (!result.succeeded()) {
    throw Error(Errc::LaunchFailed, rendered.argv.front() + " exited with " +
                                        std::to_string(result.exit_code.value_or(-1)));
  }
  return kExitOk;
}

// ---- projects ----

struct ProjectArgs {
  std::string name;
  std::string image;
  std::string share;
  std::string backend;
  std::string mock;
  bool force = false;
};

workflows::ProjectManager manager(Context& ctx, launch::Executor& exec, const std::string& backend) {
  auto kind = backend.empty() ? ctx.config().default_backend : launch::parse_backend_kind(backend);
  workflows::ProjectManager::Options opts{
      ctx.config().backend(kind), [&ctx](const std::string& ref) {
        return ctx.image_resolvable(ref);
      }};
  return workflows::ProjectManager(ctx.config().projects_root, exec, opts);
}

std::string port_text(const workflows::Project& p) {
  return p.port ? std::to_string(*p.port) : std::string("-");
}

int cmd_create(Context& ctx, const ProjectArgs& a, workflows::ProjectMode mode) {
  launch::MockExecutor unused;
  auto mgr = manager(ctx, unused, a.backend);
  auto share = a.share.empty() ? fs::current_path().string() : fs::absolute(a.share).string();
  auto p = mgr.create(a.name, a.image.empty() ? ctx.config().default_image : a.image, mode,
                      share);
  ctx.out << "created " << to_string(mode) << " project " << p.name;
  if (p.port) ctx.out << " on port " << *p.port;
  ctx.out << "; run `crucible start " << p.name << "`\n";
  return kExitOk;
}

int cmd_start(Context& ctx, const ProjectArgs& a) {
  workflows::Project p;
  {
    launch::MockExecutor unused;
    p = manager(ctx, unused, a.backend).get(a.name);
  }
  bool notebook = p.mode == workflows::ProjectMode::Notebook;
  // Notebook runs detach and print the container id, which is captured;
  // shell sessions own the terminal.
  auto exec = ctx.executor(launch::parse_backend_kind(p.backend), a.mock,
                           {.capture = notebook, .echo = false});
  auto mgr = manager(ctx, *exec, p.backend);
  mgr.start(a.name);
  p = mgr.get(a.name);
  ctx.out << p.name << " running";
  if (notebook) ctx.out << " at " << workflows::notebook_url(p);
  ctx.out << '\n';
  return kExitOk;
}

int cmd_stop(Context& ctx, const ProjectArgs& a) {
  launch::MockExecutor lookup;
  auto kind = manager(ctx, lookup, a.backend).get(a.name).backend;
  auto exec = ctx.executor(launch::parse_backend_kind(kind), a.mock, {});
  auto p = manager(ctx, *exec, kind).stop(a.name);
  ctx.out << p.name << " stopped\n";
  return kExitOk;
}

int cmd_rm(Context& ctx, const ProjectArgs& a) {
  launch::MockExecutor lookup;
  auto kind = manager(ctx, lookup, a.backend).get(a.name).backend;
  auto exec = ctx.executor(launch::parse_backend_kind(kind), a.mock, {});
  manager(ctx, *exec, kind).remove(a.name, a.force);
  ctx.out << "removed " << a.name << '\n';
  return kExitOk;
}

int cmd_ls(Context& ctx) {
  launch::MockExecutor unused;
  std::vector<std::vector<std::string>> rows{{"NAME", "STATE", "MODE", "IMAGE", "PORT", "URL"}};
  for (const auto& p : manager(ctx, unused, "").list()) {
    rows.push_back({p.name, std::string(to_string(p.state)), std::string(to_string(p.mode)),
                    p.image_ref, port_text(p), p.port ? workflows::notebook_url(p) : "-"});
  }
  ctx.out << table_text(rows);
  return kExitOk;
}

// ---- hpc ----

struct HpcArgs {
  int nprocs = 1;
  std::string image;
  std::string manifest;
  std::string scheduler = "slurm-srun";
  std::string mode = "host-launch";
  std::string backend = "shifter";
  std::string abi_table;
  std::vector<std::string> env;
  std::vector<std::string> command;
  bool dry_run = false;
};

int cmd_hpc_plan(Context& ctx, const HpcArgs& a) {
  hpc::JobRequest req;
  req.spec.image_ref = a.image.empty() ? ctx.config().default_image : a.image;
  req.spec.command = a.command;
  for (const auto& e : a.env) {
    auto [n, v] = split_pair(e, '=', Errc::InvalidLaunchSpec, "NAME=VALUE");
    req.spec.env.push_back({n, v});
  }
  req.backend = ctx.config().backend(launch::parse_backend_kind(a.backend));
  req.nprocs = a.nprocs;
  if (!a.manifest.empty()) req.manifest = hpc::load_manifest(a.manifest);
  req.scheduler = hpc::parse_scheduler(a.scheduler);
  req.mode = hpc::parse_job_mode(a.mode);
  auto plan = hpc::plan_hpc_job(req, ctx.abi_table(a.abi_table));
  for (const auto& w : plan.warnings) ctx.err << "warning: " << w.code << ": " << w.detail << '\n';
  ctx.out << launch::shell_line(plan.argv) << '\n';
  return kExitOk;
}

int cmd_hpc_stage(Context& ctx, const HpcArgs& a) {
  auto manifest = hpc::load_manifest(a.manifest);
  auto steps = a.dry_run ? hpc::plan_staging(manifest) : hpc::apply_staging(manifest);
  for (const auto& s : steps) {
    ctx.out << (a.dry_run ? "would copy " : "copied ") << s.source.string() << " -> "
            << s.destination.string() << '\n';
  }
  if (steps.empty()) ctx.out << "staged libraries are up to date\n";
  return kExitOk;
}

// ---- bench ----

std::vector<std::string> default_segments(const bench::StatsTable& stats,
                                          const std::string& workload) {
  std::set<std::string> phases;
  for (const auto& [k, _] : stats) {
    if (!workload.empty() && k.workload != workload) continue;
    if (k.phase != bench::kTotalPhase && k.phase != bench::kOtherPhase) phases.insert(k.phase);
  }
  std::vector<std::string> out(phases.begin(), phases.end());
  out.emplace_back(bench::kOtherPhase);
  return out;
}

int emit_reports(Context& ctx, const bench::StatsTable& stats, const std::string& baseline,
                 const ReportArgs& a) {
  auto diffs = bench::differential(stats, baseline);
  std::vector<bench::Verdict> verdicts;
  if (*a.threshold_opt) {
    verdicts = bench::regression_check(diffs, a.threshold, parse_overrides(a.overrides));
  } else if (!a.overrides.empty()) {
    throw Error(Errc::InvalidThreshold, "--override needs --threshold");
  }
  if (!a.csv.empty()) report::emit_csv(stats, a.csv);
  if (!a.plot.empty()) {
    report::PlotSpec spec;
    spec.kind = report::parse_plot_kind(a.layout);
    spec.group_key = report::parse_group_key(a.group_key);
    spec.error_bars = !a.no_error_bars;
    if (!a.workload.empty()) spec.workload = a.workload;
    if (*a.axis_cap_opt) spec.axis_cap = a.axis_cap;
    spec.segments = a.segments;
    if (spec.kind == report::PlotKind::StackedBars && spec.segments.empty()) {
      spec.segments = default_segments(stats, a.workload);
    }
    report::emit_plot_data(stats, spec, a.plot);
  }
  ctx.out << report::render_summary(stats, diffs, verdicts);
  bool failed = std::any_of(verdicts.begin(), verdicts.end(),
                            [](const bench::Verdict& v) { return !v.passed; });
  return failed ? kExitRegression : kExitOk;
}

int cmd_bench_run(Context& ctx, const std::string& campaign_path, const std::string& out_path,
                  const std::string& mock_fixture, const ReportArgs& report_args) {
  auto campaign = bench::load_campaign(campaign_path);
  std::unique_ptr<launch::Executor> process;
  std::unique_ptr<bench::RunExecutor> runner;
  if (!mock_fixture.empty()) {
    process = std::make_unique<launch::MockExecutor>(launch::MockExecutor::from_file(mock_fixture));
    runner = std::make_unique<bench::CommandRunExecutor>(*process);
  } else if (campaign.executor == bench::ExecutorKind::Mock) {
    runner = std::make_unique<bench::ModelRunExecutor>(bench::MockModel::load(campaign.model_path),
                                                       campaign.seed, campaign.repetitions);
  } else {
    process = std::make_unique<launch::ProcessExecutor>();
    runner = std::make_unique<bench::CommandRunExecutor>(*process);
  }
  auto result = bench::run_campaign(campaign, *runner);
  print_warnings(result.warnings, ctx.err);
  write_file_atomic(out_path, bench::serialize_records(result.records), Errc::WriteFailure);
  int failed = static_cast<int>(std::count_if(result.records.begin(), result.records.end(),
                                              [](const auto& r) { return r.failed; }));
  ctx.err << campaign.name << ": " << result.records.size() << " records (" << failed
          << " failed) from " << result.runs_executed << " runs written to " << out_path << '\n';
  return emit_reports(ctx, bench::aggregate(result.records), campaign.baseline().label,
                      report_args);
}

int cmd_bench_report(Context& ctx, const std::string& records_path, const std::string& baseline,
                     const ReportArgs& a) {
  auto records = bench::parse_records(read_file(records_path));
  return emit_reports(ctx, bench::aggregate(records), baseline, a);
}

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"crucible: container images, launches, projects and benchmark campaigns",
               "crucible"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // image-model
  std::string recipe, tag, ref, name, registry;
  auto* build = app.add_subcommand("build", "Build an image from a recipe file");
  build->add_option("recipe", recipe, "Recipe file")->required();
  build->add_option("-t,--tag", tag, "Tag the built image");
  auto* tag_cmd = app.add_subcommand("tag", "Point a tag at an image");
  tag_cmd->add_option("image", ref, "Tag, id or unique id prefix")->required();
  tag_cmd->add_option("name", name, "New tag name")->required();
  auto* images = app.add_subcommand("images", "List stored images and layer sharing");
  auto* pull = app.add_subcommand("pull", "Import an image from a registry directory");
  pull->add_option("reference", ref, "name[:tag]")->required();
  pull->add_option("-r,--registry", registry, "Registry directory");

  // launch
  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Launch a container");
  add_run_options(run_cmd, run_args);
  run_cmd->add_flag("--print", run_args.print, "Print the command line instead of running it");
  auto* print_cmd = app.add_subcommand("print-command", "Print the command a verb would run");
  print_cmd->require_subcommand(1);
  RunArgs print_args;
  auto* print_run = print_cmd->add_subcommand("run", "Launch a container");
  add_run_options(print_run, print_args);

  // workflows
  ProjectArgs proj;
  auto project_cmd = [&](const char* verb, const char* help) {
    auto* sub = app.add_subcommand(verb, help);
    sub->add_option("name", proj.name, "Project name")->required();
    sub->add_option("-b,--backend", proj.backend, "docker or mock");
    sub->add_option("--mock", proj.mock, "Fixture table answering mock backend calls");
    return sub;
  };
  auto* notebook = project_cmd("notebook", "Create a notebook project");
  auto* create = project_cmd("create", "Create a shell project");
  for (auto* sub : {notebook, create}) {
    sub->add_option("--image", proj.image, "Image reference");
    sub->add_option("-s,--share", proj.share, "Host directory shared into the container");
  }
  auto* start = project_cmd("start", "Start or resume a project");
  auto* stop = project_cmd("stop", "Stop a running project");
  auto* rm = project_cmd("rm", "Remove a project");
  rm->add_flag("-f,--force", proj.force, "Stop first if running");
  auto* ls = app.add_subcommand("ls", "List projects");

  // hpc
  HpcArgs hpc_args;
  auto* hpc_cmd = app.add_subcommand("hpc", "HPC job planning and MPI library staging");
  hpc_cmd->require_subcommand(1);
  auto* plan = hpc_cmd->add_subcommand("plan", "Print the job command line");
  plan->add_option("-n,--nprocs", hpc_args.nprocs, "MPI processes")->check(CLI::PositiveNumber);
  plan->add_option("-i,--image", hpc_args.image, "Image reference");
  plan->add_option("-m,--manifest", hpc_args.manifest, "Injection manifest");
  plan->add_option("-s,--scheduler", hpc_args.scheduler, "slurm-srun, mpirun or none");
  plan->add_option("--mode", hpc_args.mode, "host-launch or inside-container");
  plan->add_option("-b,--backend", hpc_args.backend, "Runtime backend");
  plan->add_option("-a,--abi-table", hpc_args.abi_table, "ABI family table");
  plan->add_option("-e,--env", hpc_args.env, "Environment variable NAME=VALUE")
      ->allow_extra_args(false);
  plan->add_option("command", hpc_args.command, "Command to run")->required();
  auto* stage = hpc_cmd->add_subcommand("stage", "Copy host MPI libraries to the staged dir");
  stage->add_option("-m,--manifest", hpc_args.manifest, "Injection manifest")->required();
  stage->add_flag("--dry-run", hpc_args.dry_run, "Only list the copies");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark campaigns and reports");
  bench_cmd->require_subcommand(1);
  std::string campaign, out_path, records, baseline = "native", mock_fixture;
  ReportArgs bench_report_args, report_args;
  auto* bench_run = bench_cmd->add_subcommand("run", "Run a campaign");
  bench_run->add_option("-c,--campaign", campaign, "Campaign file")->required();
  bench_run->add_option("-o,--out", out_path, "Records file to write")->required();
  bench_run->add_option("--mock-fixture", mock_fixture,
                        "Answer workload commands from a fixture table");
  add_report_options(bench_run, bench_report_args);
  auto* bench_report = bench_cmd->add_subcommand("report", "Report on a records file");
  bench_report->add_option("-r,--records", records, "Records file")->required();
  bench_report->add_option("--baseline", baseline, "Baseline platform label");
  add_report_options(bench_report, report_args);

  if (args.empty()) {
    err << app.help();
    return kExitUsage;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // --help: CLI11 prints the help of the innermost parsed subcommand.
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: usage: " << e.what() << " (see --help)\n";
    return kExitUsage;
  }

  Context ctx(out, err);
  if (*build) return cmd_build(ctx, recipe, tag);
  if (*tag_cmd) return cmd_tag(ctx, ref, name);
  if (*images) return cmd_images(ctx);
  if (*pull) return cmd_pull(ctx, ref, registry);
  if (*run_cmd) return cmd_run(ctx, run_args, run_cmd->remaining(), false);
  if (*print_run) return cmd_run(ctx, print_args, print_run->remaining(), true);
  if (*notebook) return cmd_create(ctx, proj, workflows::ProjectMode::Notebook);
  if (*create) return cmd_create(ctx, proj, workflows::ProjectMode::Shell);
  if (*start) return cmd_start(ctx, proj);
  if (*stop) return cmd_stop(ctx, proj);
  if (*rm) return cmd_rm(ctx, proj);
  if (*ls) return cmd_ls(ctx);
  if (*plan) return cmd_hpc_plan(ctx, hpc_args);
  if (*stage) return cmd_hpc_stage(ctx, hpc_args);
  if (*bench_run) return cmd_bench_run(ctx, campaign, out_path, mock_fixture, bench_report_args);
  if (*bench_report) return cmd_bench_report(ctx, records, baseline, report_args);
  err << app.help();
  return kExitUsage;
}

// Diagnostics are always a single line.
std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  try {
    return run(args, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << one_line(e.what()) << '\n';
    return kExitError;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << one_line(e.what()) << " (see --help)\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: Internal: " << one_line(e.what()) << '\n';
    return kExitError;
  }
}

}  // namespace crucible::cli
