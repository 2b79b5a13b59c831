// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "crucible/bench/campaign.hpp"
#include "crucible/bench/stats.hpp"
#include "crucible/bench/timing.hpp"
#include "crucible/cli/dispatch.hpp"
#include "crucible/error.hpp"
#include "crucible/hpc/inject.hpp"
#include "crucible/image/recipe.hpp"
#include "crucible/image/store.hpp"
#include "crucible/launch/executor.hpp"
#include "crucible/launch/launch_spec.hpp"
#include "crucible/report/report.hpp"
#include "crucible/util.hpp"
#include "crucible/workflows/project.hpp"
#include "json.hpp"
#include "support/temp_dir.hpp"

using namespace crucible;

namespace {

const std::filesystem::path kFixtures(CRUCIBLE_FIXTURES);

// Collects failure messages for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok && failures.size() < 5) failures.push_back(what);
  }
  void equal(const std::string& got, const std::string& want, const std::string& what) {
    expect(got == want, what + ": got '" + got + "', want '" + want + "'");
  }
};

std::optional<Errc> error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string fmt(double v) { return format_g(v, 6); }

bench::StatsTable fixture_stats(const std::string& name) {
  auto c = bench::load_campaign(kFixtures / "campaigns" / (name + ".json"));
  bench::ModelRunExecutor exec(bench::MockModel::load(c.model_path), c.seed, c.repetitions);
  return bench::aggregate(bench::run_campaign(c, exec).records);
}

double mean(const bench::StatsTable& t, const std::string& w, const std::string& p, int n,
            const std::string& phase) {
  auto it = t.find({w, p, n, phase});
  return it == t.end() ? NAN : it->second.mean;
}

// ---- 1. golden commands ----

void golden_commands(Check& c) {
  launch::Backend docker{launch::BackendKind::Docker, {}};
  launch::Backend shifter{launch::BackendKind::Shifter, {}};
  auto line = [](const launch::LaunchSpec& s, const launch::Backend& b) {
    return launch::shell_line(launch::synthesize_command(s, b).argv);
  };

  launch::LaunchSpec basic;
  basic.image_ref = "quay.io/fenicsproject/stable";
  basic.interactive = true;
  c.equal(line(basic, docker), "docker run -ti quay.io/fenicsproject/stable", "basic run");

  auto volume = basic;
  volume.mounts = {{"$(pwd)", "/home/fenics/shared"}};
  c.equal(line(volume, docker),
          "docker run -ti -v $(pwd):/home/fenics/shared quay.io/fenicsproject/stable",
          "volume run");

  launch::LaunchSpec notebook;
  notebook.image_ref = "quay.io/fenicsproject/stable";
  notebook.workdir = "/home/fenics/shared";
  notebook.mounts = {{"$(pwd)", "/home/fenics/shared"}};
  notebook.detach = true;
  notebook.ports = {{"127.0.0.1", 8888, 8888}};
  notebook.command = std::vector<std::string>{"jupyter-notebook", "--ip=0.0.0.0"};
  c.equal(line(notebook, docker),
          "docker run -w /home/fenics/shared -v $(pwd):/home/fenics/shared -d -p "
          "127.0.0.1:8888:8888 quay.io/fenicsproject/stable jupyter-notebook --ip=0.0.0.0",
          "notebook run");

  launch::LaunchSpec hpc_spec;
  hpc_spec.image_ref = "quay.io/fenicsproject/stable:2016.1.0r1";
  hpc_spec.command = std::vector<std::string>{"./demo_poisson"};
  c.equal(line(hpc_spec, shifter),
          "shifter --image=docker:quay.io/fenicsproject/stable:2016.1.0r1 ./demo_poisson",
          "shifter run");

  hpc::JobRequest req;
  req.spec = hpc_spec;
  req.nprocs = 192;
  req.scheduler = hpc::Scheduler::SlurmSrun;
  req.manifest = hpc::load_manifest(kFixtures / "hpc" / "edison-manifest.json");
  auto plan = hpc::plan_hpc_job(req);
  c.equal(launch::shell_line(plan.argv),
          "srun -n 192 shifter env LD_LIBRARY_PATH=$SCRATCH/hpc-mpich/lib "
          "--image=docker:quay.io/fenicsproject/stable:2016.1.0r1 ./demo_poisson",
          "srun injection line");
  c.expect(plan.warnings.empty(), "injection plan carries no warning");
}

// ---- 2. layer dedup ----

std::uint64_t oracle_size(const image::Directive& d) {
  return d.kind == image::DirectiveKind::From ? 0 : 1024 * d.argument.size();
}

// Layer ids recomputed from the documented digest input.
std::vector<std::string> oracle_chain(const image::Recipe& r) {
  std::vector<std::string> ids;
  std::string parent;
  for (const auto& d : r.directives) {
    std::string input = parent + "\n" + std::string(image::to_string(d.kind)) + " " +
                        d.argument + "\n" + std::to_string(oracle_size(d));
    parent = sha256_hex(input);
    ids.push_back(parent);
  }
  return ids;
}

void layer_dedup(Check& c) {
  static const char* bases[] = {"ubuntu:16.04", "ubuntu:18.04", "debian:9"};
  static const char* bodies[] = {"USER root",        "USER fenics", "WORKDIR /home/fenics",
                                 "ENV PATH=/opt/bin", "COPY demo.py /tmp",
                                 "RUN make -j4",     "RUN apt-get -y update"};
  std::mt19937 rng(2017);
  int pairs = 0;
  for (int store_round = 0; store_round < 10; ++store_round) {
    test::TempDir dir;
    auto store = image::Store::open(dir / "store");
    std::map<std::string, std::uint64_t> union_layers;
    std::map<std::string, std::uint64_t> logical;
    for (int p = 0; p < 12; ++p, ++pairs) {
      std::string common = std::string("FROM ") + bases[rng() % 3] + "\n";
      int k_extra = static_cast<int>(rng() % 4);
      for (int i = 0; i < k_extra; ++i) common += std::string(bodies[rng() % 7]) + "\n";
      std::string a = common, b = common;
      int tail_a = static_cast<int>(rng() % 3), tail_b = static_cast<int>(rng() % 3);
      a += "RUN variant-a-" + std::to_string(pairs) + "\n";
      b += "RUN variant-b-" + std::to_string(pairs) + "\n";
      for (int i = 0; i < tail_a; ++i) a += std::string(bodies[rng() % 7]) + "\n";
      for (int i = 0; i < tail_b; ++i) b += std::string(bodies[rng() % 7]) + "\n";

      std::size_t k = 1 + k_extra;
      auto ra = image::parse_recipe(a), rb = image::parse_recipe(b);
      auto ia = image::build_image(ra, store).image, ib = image::build_image(rb, store).image;
      auto oa = oracle_chain(ra), ob = oracle_chain(rb);
      c.expect(ia.layers == oa && ib.layers == ob, "layer ids match recomputed digests");
      bool shared = true;
      for (std::size_t i = 0; i < k; ++i) shared = shared && ia.layers[i] == ib.layers[i];
      c.expect(shared, "shared prefix layers identical, pair " + std::to_string(pairs));
      c.expect(ia.layers[k] != ib.layers[k], "divergent layer differs, pair " +
                                                   std::to_string(pairs));
      for (const auto* rec : {&ra, &rb}) {
        auto ids = oracle_chain(*rec);
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
          union_layers[ids[i]] = oracle_size(rec->directives[i]);
          total += oracle_size(rec->directives[i]);
        }
        logical[ids.back()] = total;
      }
      auto usage = image::store_usage(store);
      std::uint64_t stored = 0, logical_sum = 0;
      for (const auto& [_, s] : union_layers) stored += s;
      for (const auto& [_, s] : logical) logical_sum += s;
      c.expect(usage.distinct_layers == union_layers.size(), "distinct layer count");
      c.expect(usage.total_bytes == stored, "stored bytes equal set-union sum");
      c.expect(usage.per_image_logical_bytes == logical, "per-image logical bytes");
      c.expect(usage.shared_bytes == logical_sum - stored, "shared bytes");
    }
  }
  c.expect(pairs >= 100, "at least 100 recipe pairs");
}

// ---- 3. statistics oracle ----

void stats_oracle(Check& c) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> log_mag(-3, 3);
  const std::vector<std::string> ws{"poisson-lu", "io", "elasticity"};
  const std::vector<std::string> ps{"native", "docker", "rkt", "vm"};
  const std::vector<int> ns{1, 24, 96};
  std::vector<bench::TimingRecord> recs;
  std::map<std::tuple<std::string, std::string, int>, int> runs;
  for (int i = 0; i < 1000; ++i) {
    bench::TimingRecord r;
    r.workload = ws[rng() % ws.size()];
    r.platform = i < 9 ? "native" : ps[rng() % ps.size()];
    r.nprocs = i < 9 ? ns[(i / 3) % 3] : ns[rng() % ns.size()];
    if (i < 9) r.workload = ws[i % 3];
    r.run_index = runs[{r.workload, r.platform, r.nprocs}]++;
    double solve = std::pow(10.0, log_mag(rng)), assemble = std::pow(10.0, log_mag(rng));
    double other = std::pow(10.0, log_mag(rng));
    r.phase_seconds = {{"solve", solve}, {"assemble", assemble}, {"other", other}};
    r.total_seconds = solve + assemble + other;
    recs.push_back(r);
  }
  auto table = bench::aggregate(recs);

  std::map<bench::StatsKey, std::vector<double>> samples;
  for (const auto& r : recs) {
    for (const auto& [ph, v] : r.phase_seconds) samples[{r.workload, r.platform, r.nprocs, ph}].push_back(v);
    samples[{r.workload, r.platform, r.nprocs, "total"}].push_back(r.total_seconds);
  }
  c.expect(samples.size() == table.size(), "one statistics row per key");
  auto rel = [](double got, long double want) -> double {
    return want == 0 ? std::fabs(got) : std::fabs((got - want) / want);
  };
  double worst = 0;
  for (const auto& [key, xs] : samples) {
    long double sum = 0;
    for (double x : xs) sum += x;
    long double m = sum / xs.size(), ss = 0;
    for (double x : xs) ss += (x - m) * (x - m);
    long double sd = xs.size() > 1 ? std::sqrt(ss / (xs.size() - 1)) : 0;
    long double se = sd / std::sqrt(static_cast<long double>(xs.size()));
    auto it = table.find(key);
    if (it == table.end()) {
      c.expect(false, "missing key " + key.workload + "/" + key.platform);
      continue;
    }
    worst = std::max({worst, rel(it->second.mean, m), rel(it->second.sample_std, sd),
                      rel(it->second.std_error, se)});
    c.expect(it->second.n == static_cast<int>(xs.size()), "sample count");
  }
  c.expect(worst <= 1e-12, "oracle relative error " + fmt(worst) + " exceeds 1e-12");

  auto shuffled = recs;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto t2 = bench::aggregate(shuffled);
  bool same = true;
  for (const auto& [k, s] : table) {
    const auto& s2 = t2.at(k);
    same = same && s.mean == s2.mean && s.sample_std == s2.sample_std && s.n == s2.n;
  }
  c.expect(same, "permutation changes statistics");

  auto diffs = bench::differential(table, "native");
  for (double factor : {1e-3, 7.25, 1e4}) {
    auto scaled = recs;
    for (auto& r : scaled) {
      for (auto& [_, v] : r.phase_seconds) v *= factor;
      r.total_seconds *= factor;
    }
    auto st = bench::aggregate(scaled);
    auto sd = bench::differential(st, "native");
    bool ok = sd.size() == diffs.size();
    for (std::size_t i = 0; ok && i < diffs.size(); ++i) {
      ok = std::fabs(sd[i].percent - diffs[i].percent) <=
           1e-12 * std::max(1.0, std::fabs(diffs[i].percent));
    }
    for (const auto& [k, s] : table) {
      ok = ok && rel(st.at(k).mean, static_cast<long double>(s.mean) * factor) <= 1e-12;
    }
    c.expect(ok, "scaling by " + fmt(factor) + " changes differentials");
  }
}

// ---- 4. overhead margins ----

std::map<std::string, double> model_platform_percent(const std::string& model) {
  auto doc = nlohmann::json::parse(read_file(kFixtures / "models" / (model + ".json")));
  std::map<std::string, double> out;
  for (const auto& [label, f] : doc.at("platform_factor").items()) {
    out[label] = 100.0 * (f.get<double>() - 1.0);
  }
  return out;
}

void overhead_margins(Check& c) {
  auto ws_diffs = bench::differential(fixture_stats("workstation"), "native");
  auto ws_want = model_platform_percent("workstation");
  c.expect(ws_diffs.size() == 16, "16 workstation differentials");
  for (const auto& v : bench::regression_check(ws_diffs, 5.0)) {
    const auto& d = v.diff;
    bool want_pass = d.platform != "vm";
    c.expect(v.passed == want_pass, d.workload + "/" + d.platform + " verdict");
    c.expect(std::fabs(d.percent - ws_want.at(d.platform)) <= 0.1,
             d.workload + "/" + d.platform + " " + fmt(d.percent) + "% vs fixture " +
                 fmt(ws_want.at(d.platform)) + "%");
    if (d.platform == "docker" || d.platform == "rkt") {
      c.expect(std::fabs(d.percent) < 1.0, "docker/rkt within 1%");
    }
  }
  auto hp_diffs = bench::differential(fixture_stats("hpgmg"), "native");
  auto hp_want = model_platform_percent("hpgmg");
  for (const auto& v : bench::regression_check(hp_diffs, 5.0)) {
    c.expect(v.passed, "hpgmg " + v.diff.platform + " passes at 5%");
    c.expect(std::fabs(v.diff.percent - hp_want.at(v.diff.platform)) <= 0.1,
             "hpgmg " + v.diff.platform + " margin " + fmt(v.diff.percent));
  }
  for (const auto& v : bench::regression_check(hp_diffs, 2.0)) {
    c.expect(v.passed == (v.diff.platform == "native"), "hpgmg " + v.diff.platform + " at 2%");
  }
  c.expect(std::fabs(hp_want.at("docker") - 3.0) < 1e-9, "hpgmg fixture built at +3%");
}

// ---- 5. container-MPI scaling ----

void edison_pattern(Check& c) {
  auto stats = fixture_stats("edison");
  const std::string w = "poisson-cpp";
  double r24 = mean(stats, w, "shifter-containermpi", 24, "solve") /
               mean(stats, w, "shifter-hostmpi", 24, "solve");
  double r192 = mean(stats, w, "shifter-containermpi", 192, "solve") /
                mean(stats, w, "shifter-hostmpi", 192, "solve");
  c.expect(std::fabs(r24 - 1.0) <= 0.05, "24 procs ratio " + fmt(r24));
  c.expect(r192 > 2.0, "192 procs ratio " + fmt(r192));

  report::PlotSpec spec;
  spec.kind = report::PlotKind::StackedBars;
  spec.segments = {"refine", "assemble", "solve", "io", "other"};
  spec.axis_cap = 60.0;
  auto text = report::plot_text(stats, spec);
  std::istringstream in(text);
  std::string line, group;
  std::set<std::string> truncated;
  while (std::getline(in, line)) {
    if (line.rfind("[", 0) == 0) group = line;
    if (line.size() > 10 && line.substr(line.size() - 10) == " truncated") {
      truncated.insert(group + " " + line.substr(0, line.find(':')));
    }
  }
  c.expect(truncated == std::set<std::string>{"[poisson-cpp nprocs=192] shifter-containermpi"},
           "only the 192 container-MPI bar is truncated");
}

// ---- 6. python import overhead ----

void python_import_pattern(Check& c) {
  auto stats = fixture_stats("python-import");
  const std::string w = "poisson-python";
  for (int n : {24, 48, 96}) {
    auto at = std::to_string(n) + " procs: ";
    double nat = mean(stats, w, "native", n, "total");
    double con = mean(stats, w, "shifter-hostmpi", n, "total");
    c.expect(nat > con, at + "native total not above container");
    double other_gap = mean(stats, w, "native", n, "other") -
                       mean(stats, w, "shifter-hostmpi", n, "other");
    double compute_gap = 0;
    for (const char* ph : {"refine", "assemble", "solve", "io"}) {
      double a = mean(stats, w, "native", n, ph), b = mean(stats, w, "shifter-hostmpi", n, ph);
      c.expect(std::fabs(a - b) / std::max(a, b) <= 0.05, at + ph + " differs by more than 5%");
      compute_gap += a - b;
    }
    c.expect(other_gap > 0 && std::fabs(compute_gap) < 0.1 * other_gap,
             at + "gap not in the other phase");
  }
}

// ---- 7. project lifecycle ----

enum class RefState { Absent, Created, Running, Stopped };
enum class Act { Create, Start, Stop, Remove, ForceRemove };

std::pair<std::optional<Errc>, RefState> reference(RefState s, Act a) {
  using R = RefState;
  switch (a) {
    case Act::Create:
      if (s != R::Absent) return {Errc::NameTaken, s};
      return {std::nullopt, R::Created};
    case Act::Start:
      if (s == R::Absent) return {Errc::UnknownProject, s};
      if (s == R::Running) return {Errc::AlreadyRunning, s};
      return {std::nullopt, R::Running};
    case Act::Stop:
      if (s == R::Absent) return {Errc::UnknownProject, s};
      if (s != R::Running) return {Errc::NotRunning, s};
      return {std::nullopt, R::Stopped};
    case Act::Remove:
      if (s == R::Absent) return {Errc::UnknownProject, s};
      if (s != R::Stopped) return {Errc::NotStopped, s};
      return {std::nullopt, R::Absent};
    case Act::ForceRemove:
      if (s == R::Absent) return {Errc::UnknownProject, s};
      return {std::nullopt, R::Absent};
  }
  return {std::nullopt, s};
}

void project_lifecycle(Check& c) {
  std::mt19937 rng(7);
  const std::vector<std::string> names{"my-project", "scratch"};
  for (int seq = 0; seq < 200; ++seq) {
    test::TempDir dir;
    launch::MockExecutor mock({launch::FixtureRule{"docker run *", 0, 0, "c0ffee\n"},
                               launch::FixtureRule{"docker *", 0, 0, ""}});
    workflows::ProjectManager::Options opts;
    opts.backend = {launch::BackendKind::Docker, {}};
    opts.resolver = [](const std::string&) { return true; };
    opts.port_probe = [](int) { return true; };
    workflows::ProjectManager mgr(dir / "projects", mock, opts);
    std::map<std::string, RefState> ref{{names[0], RefState::Absent},
                                        {names[1], RefState::Absent}};
    int len = 1 + static_cast<int>(rng() % 10);
    for (int i = 0; i < len; ++i) {
      const auto& name = names[rng() % 2];
      auto act = static_cast<Act>(rng() % 5);
      std::optional<Errc> got;
      try {
        switch (act) {
          case Act::Create:
            mgr.create(name, "quay.io/fenicsproject/stable",
                       rng() % 2 ? workflows::ProjectMode::Notebook
                                 : workflows::ProjectMode::Shell,
                       "/work");
            break;
          case Act::Start: mgr.start(name); break;
          case Act::Stop: mgr.stop(name); break;
          case Act::Remove: mgr.remove(name, false); break;
          case Act::ForceRemove: mgr.remove(name, true); break;
        }
      } catch (const Error& e) {
        got = e.code();
      }
      auto [want, next] = reference(ref[name], act);
      c.expect(got == want, "sequence " + std::to_string(seq) + " step " + std::to_string(i) +
                                ": error classification differs");
      ref[name] = next;
      for (const auto& n : names) {
        RefState seen = RefState::Absent;
        for (const auto& p : mgr.list()) {
          if (p.name != n) continue;
          seen = p.state == workflows::ProjectState::Created ? RefState::Created
                 : p.state == workflows::ProjectState::Running ? RefState::Running
                                                               : RefState::Stopped;
        }
        c.expect(seen == ref[n], "sequence " + std::to_string(seq) + ": state of " + n);
      }
    }
  }
}

// ---- 8. end-to-end campaign ----

void end_to_end_campaign(Check& c) {
  test::TempDir dir;
  ::setenv("CRUCIBLE_CONFIG", (dir / "config.json").c_str(), 1);
  auto campaign = (kFixtures / "campaigns" / "workstation.json").string();
  auto run_once = [&](const std::string& tag) {
    std::vector<std::string> args{"bench", "run", "--campaign", campaign,
                                  "--out", (dir / (tag + ".tsv")).string(),
                                  "--csv", (dir / (tag + ".csv")).string(),
                                  "--plot", (dir / (tag + ".dat")).string(),
                                  "--layout", "grouped"};
    std::ostringstream out, err;
    int code = cli::dispatch(args, out, err);
    c.expect(code == 0, "bench run exit " + std::to_string(code) + ": " + err.str());
    return out.str();
  };
  auto summary_a = run_once("a");
  auto summary_b = run_once("b");
  ::unsetenv("CRUCIBLE_CONFIG");

  auto records = bench::parse_records(read_file(dir / "a.tsv"));
  c.expect(records.size() == 80, "records: " + std::to_string(records.size()));
  int failed = 0;
  for (const auto& r : records) failed += r.failed;
  c.expect(failed == 0, "failed runs in mock campaign");

  int total_rows = 0;
  std::istringstream csv(read_file(dir / "a.csv"));
  std::string line;
  std::getline(csv, line);
  c.equal(line, "workload,platform,nprocs,phase,mean_s,std_s,stderr_s,n", "CSV header");
  while (std::getline(csv, line)) total_rows += split(line, ',').at(3) == "total";
  c.expect(total_rows == 16, "CSV total rows: " + std::to_string(total_rows));

  std::istringstream plot(read_file(dir / "a.dat"));
  std::vector<int> bars;
  while (std::getline(plot, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      bars.push_back(0);
    } else if (!bars.empty()) {
      ++bars.back();
      c.expect(split_whitespace(line).size() == 3, "plot row 'label value error': " + line);
    }
  }
  c.expect(bars == std::vector<int>{4, 4, 4, 4}, "plot layout is 4 groups x 4 bars");

  for (const char* ext : {".tsv", ".csv", ".dat"}) {
    c.expect(read_file(dir / (std::string("a") + ext)) == read_file(dir / (std::string("b") + ext)),
             std::string(ext) + " differs between runs");
  }
  c.expect(summary_a == summary_b, "summary differs between runs");
}

// ---- 9. ABI gate ----

void abi_gate(Check& c) {
  const auto& table = hpc::AbiTable::builtin();
  std::vector<std::pair<std::string, std::string>> impls;  // (impl, family)
  for (const auto& fam : table.families()) {
    for (const auto& m : fam.members) impls.emplace_back(m, fam.name);
  }
  c.expect(impls.size() >= 5, "default table lists the MPICH-ABI family and Open MPI");
  int pairs = 0;
  for (const auto& [container, cfam] : impls) {
    for (const auto& [host, hfam] : impls) {
      ++pairs;
      hpc::JobRequest req;
      req.spec.image_ref = "quay.io/fenicsproject/stable:2016.1.0r1";
      req.spec.command = std::vector<std::string>{"./demo_poisson"};
      req.nprocs = 48;
      req.manifest = hpc::InjectionManifest{"/opt/mpi/lib", "$SCRATCH/mpi", {"libmpi.so.12"},
                                            "LD_LIBRARY_PATH", host, container};
      auto pair = container + " in container, " + host + " on host";
      if (cfam != hfam) {
        c.expect(error_of([&] { hpc::plan_hpc_job(req, table); }) == Errc::IncompatibleAbi,
                 pair + ": not refused");
      } else {
        auto plan = hpc::plan_hpc_job(req, table);
        auto shifter = std::find(plan.argv.begin(), plan.argv.end(), "shifter");
        c.expect(shifter != plan.argv.end() && shifter + 2 < plan.argv.end() &&
                     shifter[1] == "env" && shifter[2] == "LD_LIBRARY_PATH=$SCRATCH/mpi",
                 pair + ": env segment");
        c.expect(plan.warnings.empty(), pair + ": unexpected warning");
      }
    }
  }
  c.expect(pairs == static_cast<int>(impls.size() * impls.size()), "all ordered pairs");

  hpc::JobRequest bare;
  bare.spec.image_ref = "quay.io/fenicsproject/stable:2016.1.0r1";
  bare.spec.command = std::vector<std::string>{"./demo_poisson"};
  bare.nprocs = 48;
  auto plan = hpc::plan_hpc_job(bare, table);
  c.expect(plan.warnings.size() == 1 && plan.warnings[0].code == hpc::kContainerMpiFallback,
           "missing manifest records the container-MPI fallback warning");
  c.equal(launch::shell_line(plan.argv),
          "srun -n 48 shifter --image=docker:quay.io/fenicsproject/stable:2016.1.0r1 "
          "./demo_poisson",
          "fallback line");
}

struct Criterion {
  int number;
  const char* title;
  double budget_s;
  void (*fn)(Check&);
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {1, "golden commands", 1, golden_commands},
      {2, "layer dedup property suite", 10, layer_dedup},
      {3, "statistics oracle equivalence", 5, stats_oracle},
      {4, "overhead margin fixtures", 5, overhead_margins},
      {5, "container-MPI scaling pattern", 5, edison_pattern},
      {6, "python import pattern", 5, python_import_pattern},
      {7, "project lifecycle fuzz", 5, project_lifecycle},
      {8, "end-to-end mock campaign", 10, end_to_end_campaign},
      {9, "ABI gate", 1, abi_gate},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check check;
    auto t0 = std::chrono::steady_clock::now();
    try {
      cr.fn(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("unexpected exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s) {
      check.failures.push_back("took " + fmt(secs) + " s, budget " + fmt(cr.budget_s) + " s");
    }
    bool ok = check.failures.empty();
    failed += !ok;
    std::printf("%s %d %s (%.3f s)\n", ok ? "PASS" : "FAIL", cr.number, cr.title, secs);
    for (const auto& f : check.failures) std::printf("     %s\n", f.c_str());
  }
  std::printf("%d of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}
