#include "crucible/hpc/inject.hpp"

#include <algorithm>
#include <map>

#include "crucible/error.hpp"
#include "crucible/util.hpp"
#include "json.hpp"

namespace crucible::hpc {

using nlohmann::json;

const std::string_view kDefaultAbiTable =
    "# family\timplementation\n"
    "mpich-abi\tmpich\n"
    "mpich-abi\tcray-mpich\n"
    "mpich-abi\tintel-mpi\n"
    "mpich-abi\tmvapich2\n"
    "openmpi\topen-mpi\n";

AbiTable AbiTable::parse(std::string_view text) {
  AbiTable table;
  std::map<std::string, std::string> owner;
  int lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() != 2 || trim(fields[0]).empty() || trim(fields[1]).empty()) {
      throw Error(Errc::InvalidAbiTable,
                  "line " + std::to_string(lineno) + ": expected family<TAB>implementation");
    }
    std::string family(trim(fields[0]));
    std::string impl(trim(fields[1]));
    auto [it, inserted] = owner.emplace(impl, family);
    if (!inserted && it->second != family) {
      throw Error(Errc::InvalidAbiTable,
                  impl + " listed in both " + it->second + " and " + family);
    }
    auto fam = std::find_if(table.families_.begin(), table.families_.end(),
                            [&](const AbiFamily& f) { return f.name == family; });
    if (fam == table.families_.end()) {
      table.families_.push_back({family, {}});
      fam = std::prev(table.families_.end());
    }
    fam->members.insert(impl);
  }
  if (table.families_.empty()) throw Error(Errc::InvalidAbiTable, "table is empty");
  return table;
}

AbiTable AbiTable::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw Error(Errc::InvalidAbiTable, e.what());
  }
  return parse(text);
}

const AbiTable& AbiTable::builtin() {
  static const AbiTable table = parse(kDefaultAbiTable);
  return table;
}

std::optional<std::string> AbiTable::family_of(std::string_view impl) const {
  for (const auto& f : families_) {
    if (f.members.count(std::string(impl))) return f.name;
  }
  return std::nullopt;
}

AbiCheck check_abi(std::string_view container_impl, std::string_view host_impl,
                   const AbiTable& table) {
  auto cf = table.family_of(container_impl);
  if (!cf) throw Error(Errc::UnknownImplementation, std::string(container_impl));
  auto hf = table.family_of(host_impl);
  if (!hf) throw Error(Errc::UnknownImplementation, std::string(host_impl));
  AbiCheck out;
  out.container_family = *cf;
  out.host_family = *hf;
  out.compatible = *cf == *hf;
  if (out.compatible) out.family = *cf;
  return out;
}

namespace {

[[noreturn]] void bad_manifest(const std::string& what) { throw Error(Errc::InvalidManifest, what); }

std::string string_field(const json& j, const char* key, bool required,
                         std::string fallback = {}) {
  if (!j.contains(key)) {
    if (required) bad_manifest(std::string("missing field ") + key);
    return fallback;
  }
  if (!j[key].is_string()) bad_manifest(std::string(key) + " must be a string");
  return j[key].get<std::string>();
}

std::filesystem::path expanded(const std::string& path, const char* field) {
  auto out = expand_env(path);
  if (!out) bad_manifest(std::string(field) + " references an unset variable: " + path);
  return *out;
}

bool same_content(const std::filesystem::path& a, const std::filesystem::path& b) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(b, ec)) return false;
  auto sa = std::filesystem::file_size(a, ec);
  if (ec) return false;
  auto sb = std::filesystem::file_size(b, ec);
  if (ec || sa != sb) return false;
  auto ha = sha256_file(a);
  auto hb = sha256_file(b);
  return ha && hb && *ha == *hb;
}

}  // namespace

InjectionManifest parse_manifest(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    bad_manifest(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_manifest("manifest must be a JSON object");
  static const std::set<std::string> known{"host_lib_dir", "staged_dir", "libraries",
                                           "env_var",      "host_impl",  "container_impl"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) bad_manifest("unknown field " + key);
  }
  InjectionManifest m;
  m.host_lib_dir = string_field(j, "host_lib_dir", true);
  m.staged_dir = string_field(j, "staged_dir", true);
  m.env_var = string_field(j, "env_var", false, "LD_LIBRARY_PATH");
  m.host_impl = string_field(j, "host_impl", true);
  m.container_impl = string_field(j, "container_impl", true);
  if (!j.contains("libraries") || !j["libraries"].is_array()) {
    bad_manifest("libraries must be a list of file names");
  }
  for (const auto& lib : j["libraries"]) {
    if (!lib.is_string() || lib.get<std::string>().empty()) {
      bad_manifest("libraries must be non-empty strings");
    }
    m.libraries.push_back(lib.get<std::string>());
  }
  if (m.libraries.empty()) bad_manifest("libraries is empty");
  if (m.host_lib_dir.empty() || m.staged_dir.empty()) bad_manifest("empty directory");
  auto norm = [](const std::string& p) {
    return std::filesystem::path(p).lexically_normal().string();
  };
  if (norm(m.host_lib_dir) == norm(m.staged_dir) ||
      norm(m.host_lib_dir + "/") == norm(m.staged_dir + "/")) {
    bad_manifest("staged_dir must differ from host_lib_dir");
  }
  if (m.env_var.empty() ||
      m.env_var.find_first_of("= \t") != std::string::npos) {
    bad_manifest("bad env_var " + m.env_var);
  }
  return m;
}

InjectionManifest load_manifest(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    bad_manifest(e.what());
  }
  return parse_manifest(text);
}

std::vector<CopyStep> plan_staging(const InjectionManifest& manifest) {
  auto host = expanded(manifest.host_lib_dir, "host_lib_dir");
  auto staged = expanded(manifest.staged_dir, "staged_dir");
  std::vector<CopyStep> plan;
  std::map<std::string, std::string> seen;  // basename -> library entry
  for (const auto& lib : manifest.libraries) {
    auto base = std::filesystem::path(lib).filename().string();
    auto [it, inserted] = seen.emplace(base, lib);
    if (!inserted) {
      if (it->second == lib) continue;
      bad_manifest(lib + " and " + it->second + " stage to the same file");
    }
    auto source = host / lib;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(source, ec)) {
      throw Error(Errc::MissingLibrary, lib);
    }
    auto dest = staged / base;
    if (!same_content(source, dest)) plan.push_back({source, dest});
  }
  return plan;
}

std::vector<CopyStep> apply_staging(const InjectionManifest& manifest, int lock_timeout_ms) {
  auto staged = expanded(manifest.staged_dir, "staged_dir");
  std::error_code ec;
  std::filesystem::create_directories(staged, ec);
  if (ec) throw Error(Errc::StageDirUnwritable, staged.string() + ": " + ec.message());
  FileLock lock(staged / ".crucible-stage.lock", Errc::StageDirUnwritable, lock_timeout_ms);
  auto plan = plan_staging(manifest);
  for (const auto& step : plan) {
    auto tmp = step.destination;
    tmp += ".tmp";
    std::filesystem::copy_file(step.source, tmp,
                               std::filesystem::copy_options::overwrite_existing, ec);
    if (!ec) std::filesystem::rename(tmp, step.destination, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::StageDirUnwritable, "cannot stage " + step.destination.string());
    }
  }
  return plan;
}

std::string_view to_string(Scheduler s) noexcept {
  switch (s) {
    case Scheduler::SlurmSrun: return "slurm-srun";
    case Scheduler::Mpirun: return "mpirun";
    case Scheduler::None: return "none";
  }
  return "?";
}

std::string_view to_string(JobMode m) noexcept {
  return m == JobMode::HostLaunch ? "host-launch" : "inside-container";
}

Scheduler parse_scheduler(std::string_view s) {
  for (auto v : {Scheduler::SlurmSrun, Scheduler::Mpirun, Scheduler::None}) {
    if (to_string(v) == s) return v;
  }
  throw Error(Errc::InvalidJob, "unknown scheduler " + std::string(s));
}

JobMode parse_job_mode(std::string_view s) {
  for (auto v : {JobMode::HostLaunch, JobMode::InsideContainer}) {
    if (to_string(v) == s) return v;
  }
  throw Error(Errc::InvalidJob, "unknown job mode " + std::string(s));
}

namespace {

std::vector<std::string> launcher_prefix(Scheduler s, int nprocs) {
  switch (s) {
    case Scheduler::SlurmSrun: return {"srun", "-n", std::to_string(nprocs)};
    case Scheduler::Mpirun: return {"mpirun", "-n", std::to_string(nprocs)};
    case Scheduler::None: break;
  }
  if (nprocs != 1) {
    throw Error(Errc::InvalidJob, "scheduler none cannot start " + std::to_string(nprocs) +
                                      " processes");
  }
  return {};
}

}  // namespace

JobPlan plan_hpc_job(const JobRequest& req, const AbiTable& table) {
  if (req.nprocs < 1) throw Error(Errc::InvalidJob, "nprocs must be positive");
  const auto kind = req.backend.kind;
  const bool containerized = kind != launch::BackendKind::Native;
  if (req.manifest) {
    auto abi = check_abi(req.manifest->container_impl, req.manifest->host_impl, table);
    if (!abi.compatible) {
      throw Error(Errc::IncompatibleAbi,
                  req.manifest->container_impl + " (" + abi.container_family + ") vs host " +
                      req.manifest->host_impl + " (" + abi.host_family +
                      "); run without a manifest to accept container-MPI performance");
    }
  }
  if (!req.spec.command || req.spec.command->empty()) {
    throw Error(Errc::InvalidJob, "job needs a command");
  }

  JobPlan plan;
  if (req.mode == JobMode::HostLaunch) {
    if (kind != launch::BackendKind::Shifter && kind != launch::BackendKind::Native) {
      throw Error(Errc::UnsupportedBackend,
                  std::string(launch::to_string(kind)) +
                      " cannot be started by a host launcher; use inside-container");
    }
    if (req.manifest && kind != launch::BackendKind::Shifter) {
      throw Error(Errc::InvalidJob, "library injection applies to shifter jobs only");
    }
    plan.argv = launcher_prefix(req.scheduler, req.nprocs);
    if (kind == launch::BackendKind::Native) {
      auto rendered = launch::synthesize_command(req.spec, req.backend);
      plan.argv.insert(plan.argv.end(), rendered.argv.begin(), rendered.argv.end());
      return plan;
    }
    auto bare = req.spec;
    bare.env.clear();
    launch::validate(req.spec);
    auto rendered = launch::synthesize_command(bare, req.backend).argv;
    std::vector<std::string> env_segment;
    if (req.manifest) {
      env_segment.push_back(req.manifest->env_var + "=" + req.manifest->staged_dir);
    }
    for (const auto& e : req.spec.env) env_segment.push_back(e.name + "=" + e.value);
    plan.argv.push_back(rendered.front());
    if (!env_segment.empty()) {
      plan.argv.emplace_back("env");
      plan.argv.insert(plan.argv.end(), env_segment.begin(), env_segment.end());
    }
    plan.argv.insert(plan.argv.end(), rendered.begin() + 1, rendered.end());
  } else {
    if (kind == launch::BackendKind::Shifter || kind == launch::BackendKind::Native) {
      throw Error(Errc::UnsupportedBackend,
                  std::string(launch::to_string(kind)) + " has no inside-container mode");
    }
    if (req.manifest) throw Error(Errc::InvalidJob, "inside-container jobs use container MPI");
    auto spec = req.spec;
    std::vector<std::string> inner{"mpirun", "-n", std::to_string(req.nprocs)};
    inner.insert(inner.end(), spec.command->begin(), spec.command->end());
    spec.command = inner;
    plan.argv = launch::synthesize_command(spec, req.backend).argv;
  }
  if (containerized && !req.manifest) {
    plan.warnings.push_back(
        {std::string(kContainerMpiFallback),
         "no injection manifest: processes use the MPI library inside the image"});
  }
  return plan;
}

}  // namespace crucible::hpc
