#include "crucible/bench/campaign.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "crucible/error.hpp"
#include "crucible/util.hpp"
#include "json.hpp"

namespace crucible::bench {

using nlohmann::json;

namespace {

[[noreturn]] void bad_campaign(const std::string& what) {
  throw Error(Errc::InvalidCampaign, what);
}

[[noreturn]] void bad_model(const std::string& what) { throw Error(Errc::InvalidModel, what); }

bool identifier(std::string_view s) {
  if (s.empty() || !std::isalnum(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

void only_keys(const json& j, const std::set<std::string>& known, const std::string& where,
               void (*fail)(const std::string&)) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) fail("unknown field " + key + " in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad_campaign("missing or mistyped field " + std::string(key) + " in " + where);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

int parse_nprocs_key(const std::string& key) {
  auto v = parse_int(key);
  if (!v || *v < 1) bad_model("nprocs key must be a positive integer: " + key);
  return static_cast<int>(*v);
}

double positive(const json& v, const std::string& what) {
  if (!v.is_number()) bad_model(what + " must be a number");
  double d = v.get<double>();
  if (!(d >= 0.0)) bad_model(what + " must be nonnegative");
  return d;
}

}  // namespace

const Platform& Campaign::baseline() const {
  for (const auto& p : platforms) {
    if (p.baseline) return p;
  }
  bad_campaign("no baseline platform");
}

Campaign parse_campaign(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad_campaign(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_campaign("campaign must be a JSON object");
  only_keys(j,
            {"name", "image", "executor", "model", "seed", "repetitions", "proc_counts",
             "scheduler", "workloads", "platforms"},
            "campaign", bad_campaign);
  Campaign c;
  c.name = j.value("name", std::string("campaign"));
  c.image = j.value("image", std::string());
  auto executor = j.value("executor", std::string("mock"));
  if (executor == "real") {
    c.executor = ExecutorKind::Real;
  } else if (executor == "mock") {
    c.executor = ExecutorKind::Mock;
  } else {
    bad_campaign("executor must be real or mock");
  }
  if (j.contains("model")) c.model_path = resolve(base_dir, get<std::string>(j, "model", "campaign"));
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", "campaign");
  if (j.contains("repetitions")) c.repetitions = get<int>(j, "repetitions", "campaign");
  if (j.contains("proc_counts")) c.proc_counts = get<std::vector<int>>(j, "proc_counts", "campaign");
  if (j.contains("scheduler")) {
    try {
      c.scheduler = hpc::parse_scheduler(get<std::string>(j, "scheduler", "campaign"));
    } catch (const Error& e) {
      bad_campaign(e.what());
    }
  }
  if (!j.contains("workloads") || !j["workloads"].is_array()) bad_campaign("workloads must be a list");
  for (const auto& wj : j["workloads"]) {
    if (!wj.is_object()) bad_campaign("workload entries must be objects");
    only_keys(wj, {"name", "command", "phases", "warmup_runs"}, "workload", bad_campaign);
    Workload w;
    w.name = get<std::string>(wj, "name", "workload");
    w.command = get<std::vector<std::string>>(wj, "command", "workload " + w.name);
    w.phases = get<std::vector<std::string>>(wj, "phases", "workload " + w.name);
    if (wj.contains("warmup_runs")) w.warmup_runs = get<int>(wj, "warmup_runs", w.name);
    c.workloads.push_back(std::move(w));
  }
  if (!j.contains("platforms") || !j["platforms"].is_array()) bad_campaign("platforms must be a list");
  for (const auto& pj : j["platforms"]) {
    if (!pj.is_object()) bad_campaign("platform entries must be objects");
    only_keys(pj, {"label", "backend", "options", "baseline", "mode", "manifest"}, "platform",
              bad_campaign);
    Platform p;
    p.label = get<std::string>(pj, "label", "platform");
    try {
      p.backend.kind = launch::parse_backend_kind(get<std::string>(pj, "backend", p.label));
    } catch (const Error& e) {
      bad_campaign("platform " + p.label + ": unknown backend " + e.what());
    }
    if (pj.contains("options")) {
      p.backend.options = get<std::map<std::string, std::string>>(pj, "options", p.label);
    }
    if (pj.contains("baseline")) p.baseline = get<bool>(pj, "baseline", p.label);
    bool docker_like = p.backend.kind == launch::BackendKind::Docker ||
                       p.backend.kind == launch::BackendKind::Rkt ||
                       p.backend.kind == launch::BackendKind::Mock;
    p.mode = docker_like ? hpc::JobMode::InsideContainer : hpc::JobMode::HostLaunch;
    if (pj.contains("mode")) {
      try {
        p.mode = hpc::parse_job_mode(get<std::string>(pj, "mode", p.label));
      } catch (const Error& e) {
        bad_campaign("platform " + p.label + ": " + e.what());
      }
    }
    if (pj.contains("manifest")) {
      p.manifest = hpc::load_manifest(resolve(base_dir, get<std::string>(pj, "manifest", p.label)));
    }
    c.platforms.push_back(std::move(p));
  }
  validate(c);
  return c;
}

Campaign load_campaign(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    bad_campaign(e.what());
  }
  return parse_campaign(text, path.parent_path());
}

void validate(const Campaign& c) {
  if (c.repetitions < 1) bad_campaign("repetitions must be at least 1");
  if (c.proc_counts.empty()) bad_campaign("proc_counts is empty");
  for (std::size_t i = 0; i < c.proc_counts.size(); ++i) {
    if (c.proc_counts[i] < 1) bad_campaign("proc_counts must be positive");
    if (i && c.proc_counts[i] <= c.proc_counts[i - 1]) {
      bad_campaign("proc_counts must be strictly ascending");
    }
  }
  if (c.workloads.empty()) bad_campaign("no workloads");
  std::set<std::string> names;
  for (const auto& w : c.workloads) {
    if (!identifier(w.name)) bad_campaign("bad workload name '" + w.name + "'");
    if (!names.insert(w.name).second) bad_campaign("duplicate workload " + w.name);
    if (w.command.empty()) bad_campaign("workload " + w.name + " has no command");
    if (w.phases.empty()) bad_campaign("workload " + w.name + " has no phases");
    if (w.warmup_runs < 0) bad_campaign("workload " + w.name + " has negative warmup_runs");
    std::set<std::string> phases;
    for (const auto& ph : w.phases) {
      if (!identifier(ph) || reserved_phase(ph)) {
        bad_campaign("workload " + w.name + ": bad phase name '" + ph + "'");
      }
      if (!phases.insert(ph).second) bad_campaign("workload " + w.name + ": duplicate phase " + ph);
    }
  }
  if (c.platforms.empty()) bad_campaign("no platforms");
  std::set<std::string> labels;
  int baselines = 0;
  bool containers = false;
  for (const auto& p : c.platforms) {
    if (!identifier(p.label)) bad_campaign("bad platform label '" + p.label + "'");
    if (!labels.insert(p.label).second) bad_campaign("duplicate platform " + p.label);
    baselines += p.baseline ? 1 : 0;
    containers = containers || p.backend.kind != launch::BackendKind::Native;
  }
  if (baselines != 1) bad_campaign("exactly one platform must be the baseline");
  if (containers && c.image.empty()) bad_campaign("container platforms need an image");
  if (c.executor == ExecutorKind::Mock && c.model_path.empty()) {
    bad_campaign("mock campaigns need a model file");
  }
  // Surface unsupported backend/mode/scheduler combinations before any run.
  for (const auto& w : c.workloads) {
    for (const auto& p : c.platforms) {
      for (int n : c.proc_counts) run_command(c, w, p, n);
    }
  }
}

hpc::JobPlan run_command(const Campaign& c, const Workload& w, const Platform& p, int nprocs) {
  launch::LaunchSpec spec;
  if (p.backend.kind != launch::BackendKind::Native) spec.image_ref = c.image;
  spec.command = w.command;
  if (nprocs == 1 && c.scheduler == hpc::Scheduler::None && !p.manifest) {
    hpc::JobPlan plan;
    plan.argv = launch::synthesize_command(spec, p.backend).argv;
    return plan;
  }
  hpc::JobRequest req;
  req.spec = spec;
  req.backend = p.backend;
  req.nprocs = nprocs;
  req.manifest = p.manifest;
  req.scheduler = c.scheduler;
  req.mode = p.mode;
  return hpc::plan_hpc_job(req);
}

MockModel MockModel::parse(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad_model(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_model("model must be a JSON object");
  only_keys(j,
            {"description", "noise", "noise_by_platform", "base", "platform_factor",
             "nprocs_factor", "phase_nprocs_factor", "adjust"},
            "model", bad_model);
  MockModel m;
  auto object = [&](const char* key) -> const json& {
    static const json empty = json::object();
    if (!j.contains(key)) return empty;
    if (!j[key].is_object()) bad_model(std::string(key) + " must be an object");
    return j[key];
  };
  if (j.contains("noise")) m.noise_ = positive(j["noise"], "noise");
  for (const auto& [label, v] : object("noise_by_platform").items()) {
    m.noise_by_platform_[label] = positive(v, "noise for " + label);
  }
  if (!j.contains("base")) bad_model("missing base");
  for (const auto& [workload, phases] : object("base").items()) {
    if (!phases.is_object() || phases.empty()) bad_model("base." + workload + " must map phases");
    for (const auto& [phase, v] : phases.items()) {
      if (phase == kTotalPhase || phase == kFailedPhase) bad_model("reserved phase " + phase);
      m.base_[workload][phase] = positive(v, "base." + workload + "." + phase);
    }
  }
  for (const auto& [label, v] : object("platform_factor").items()) {
    m.platform_factor_[label] = positive(v, "platform_factor." + label);
  }
  for (const auto& [n, v] : object("nprocs_factor").items()) {
    m.nprocs_factor_[parse_nprocs_key(n)] = positive(v, "nprocs_factor." + n);
  }
  for (const auto& [phase, table] : object("phase_nprocs_factor").items()) {
    if (!table.is_object()) bad_model("phase_nprocs_factor." + phase + " must be an object");
    for (const auto& [n, v] : table.items()) {
      m.phase_nprocs_factor_[phase][parse_nprocs_key(n)] =
          positive(v, "phase_nprocs_factor." + phase + "." + n);
    }
  }
  if (j.contains("adjust")) {
    if (!j["adjust"].is_array()) bad_model("adjust must be a list");
    for (const auto& a : j["adjust"]) {
      if (!a.is_object() || !a.contains("factor")) bad_model("adjust entries need a factor");
      only_keys(a, {"workload", "platform", "phase", "nprocs", "factor"}, "adjust", bad_model);
      Adjust adj;
      adj.factor = positive(a["factor"], "adjust factor");
      try {
        if (a.contains("workload")) adj.workload = a["workload"].get<std::string>();
        if (a.contains("platform")) adj.platform = a["platform"].get<std::string>();
        if (a.contains("phase")) adj.phase = a["phase"].get<std::string>();
        if (a.contains("nprocs")) adj.nprocs = a["nprocs"].get<int>();
      } catch (const json::exception&) {
        bad_model("mistyped adjust selector");
      }
      m.adjust_.push_back(adj);
    }
  }
  return m;
}

MockModel MockModel::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    bad_model(e.what());
  }
  return parse(text);
}

double MockModel::expected(const std::string& workload, const std::string& platform,
                           int nprocs, const std::string& phase) const {
  auto w = base_.find(workload);
  if (w == base_.end()) bad_model("no base timings for workload " + workload);
  auto ph = w->second.find(phase);
  if (ph == w->second.end()) return 0.0;
  double v = ph->second;
  if (auto it = platform_factor_.find(platform); it != platform_factor_.end()) v *= it->second;
  auto table = phase_nprocs_factor_.find(phase);
  if (table != phase_nprocs_factor_.end() && table->second.count(nprocs)) {
    v *= table->second.at(nprocs);
  } else if (auto it = nprocs_factor_.find(nprocs); it != nprocs_factor_.end()) {
    v *= it->second;
  }
  for (const auto& a : adjust_) {
    if (a.workload && *a.workload != workload) continue;
    if (a.platform && *a.platform != platform) continue;
    if (a.phase && *a.phase != phase) continue;
    if (a.nprocs && *a.nprocs != nprocs) continue;
    v *= a.factor;
  }
  return v;
}

double MockModel::noise_for(const std::string& platform) const {
  auto it = noise_by_platform_.find(platform);
  return it == noise_by_platform_.end() ? noise_ : it->second;
}

std::vector<std::string> MockModel::phases_for(const std::string& workload) const {
  std::vector<std::string> out;
  auto w = base_.find(workload);
  if (w == base_.end()) return out;
  for (const auto& [phase, _] : w->second) out.push_back(phase);
  return out;
}

launch::Execution CommandRunExecutor::run(const std::vector<std::string>& argv,
                                          const RunContext&) {
  return executor_.execute(argv);
}

double ModelRunExecutor::offset(const std::string& workload, const std::string& platform,
                                int nprocs, const std::string& phase, int run_index) const {
  const int r = repetitions_;
  if (r < 2 || run_index < 0 || run_index >= r) return 0.0;
  std::string key = workload + '\0' + platform + '\0' + std::to_string(nprocs) + '\0' + phase;
  std::uint64_t state = splitmix64(seed_ ^ fnv1a64(key));
  std::vector<int> perm(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) perm[static_cast<std::size_t>(i)] = i;
  for (int i = r - 1; i > 0; --i) {
    state = splitmix64(state);
    auto j = static_cast<int>(state % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  int k = perm[static_cast<std::size_t>(run_index)];
  return static_cast<double>(2 * k - (r - 1)) / static_cast<double>(r - 1);
}

launch::Execution ModelRunExecutor::run(const std::vector<std::string>& argv,
                                        const RunContext& ctx) {
  launch::Execution exec;
  exec.argv = argv;
  exec.exit_code = 0;
  const auto& w = ctx.workload.name;
  const auto& p = ctx.platform.label;
  double amplitude = model_.noise_for(p);
  double total = 0.0;
  std::string out;
  for (const auto& phase : model_.phases_for(w)) {
    double v = model_.expected(w, p, ctx.nprocs, phase) *
               (1.0 + amplitude * offset(w, p, ctx.nprocs, phase, ctx.run_index));
    total += v;
    if (phase != kOtherPhase) out += "TIMING " + phase + " " + format_exact(v) + "\n";
  }
  out += "TOTAL " + format_exact(total) + "\n";
  exec.stdout_text = std::move(out);
  exec.duration_s = total;
  return exec;
}

CampaignResult run_campaign(const Campaign& c, RunExecutor& executor) {
  validate(c);
  CampaignResult result;
  std::set<std::string> seen_warnings;
  for (const auto& w : c.workloads) {
    for (const auto& p : c.platforms) {
      for (int n : c.proc_counts) {
        auto plan = run_command(c, w, p, n);
        for (const auto& warn : plan.warnings) {
          auto text = p.label + ": " + warn.code + ": " + warn.detail;
          if (seen_warnings.insert(text).second) result.warnings.push_back(text);
        }
        for (int k = 0; k < w.warmup_runs; ++k) {
          executor.run(plan.argv, RunContext{w, p, n, -(k + 1)});
          ++result.runs_executed;
        }
        for (int r = 0; r < c.repetitions; ++r) {
          auto exec = executor.run(plan.argv, RunContext{w, p, n, r});
          ++result.runs_executed;
          TimingRecord rec;
          rec.workload = w.name;
          rec.platform = p.label;
          rec.nprocs = n;
          rec.run_index = r;
          if (!exec.succeeded()) {
            rec.failed = true;
            rec.exit_code = exec.exit_code.value_or(-1);
            rec.failure = "exit status " + std::to_string(rec.exit_code);
          } else {
            try {
              auto parsed = parse_timings(exec.stdout_text);
              auto missing = missing_phases(parsed, w.phases);
              if (!missing.empty()) {
                throw Error(Errc::NoTimingsFound, "missing phase " + join(missing, ", "));
              }
              rec.phase_seconds = std::move(parsed.phases);
              rec.total_seconds = parsed.total;
            } catch (const Error& e) {
              rec.failed = true;
              rec.exit_code = -1;
              rec.failure = std::string(to_string(e.code())) + ": " + e.what();
            }
          }
          result.records.push_back(std::move(rec));
        }
      }
    }
  }
  return result;
}

}  // namespace crucible::bench
