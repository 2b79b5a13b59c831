#include "crucible/workflows/project.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <map>
#include <set>

#include "crucible/error.hpp"
#include "crucible/util.hpp"

namespace crucible::workflows {

namespace {

constexpr std::string_view kExt = ".project";

std::optional<ProjectState> parse_state(std::string_view s) {
  for (auto st : {ProjectState::Created, ProjectState::Running, ProjectState::Stopped}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::optional<ProjectMode> parse_mode(std::string_view s) {
  if (s == "shell") return ProjectMode::Shell;
  if (s == "notebook") return ProjectMode::Notebook;
  return std::nullopt;
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(Errc::RegistryCorrupt, what); }

std::string first_line(std::string_view s) {
  auto t = trim(s);
  return std::string(t.substr(0, t.find('\n')));
}

}  // namespace

std::string_view to_string(ProjectState state) noexcept {
  switch (state) {
    case ProjectState::Created: return "created";
    case ProjectState::Running: return "running";
    case ProjectState::Stopped: return "stopped";
  }
  return "?";
}

std::string_view to_string(ProjectMode mode) noexcept {
  return mode == ProjectMode::Notebook ? "notebook" : "shell";
}

bool valid_project_name(std::string_view name) {
  if (name.empty()) return false;
  auto ok = [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); };
  if (!ok(name.front())) return false;
  return std::all_of(name.begin(), name.end(), [&](char c) { return ok(c) || c == '-'; });
}

std::string notebook_url(const Project& project) {
  if (!project.port) return {};
  return "http://127.0.0.1:" + std::to_string(*project.port);
}

launch::LaunchSpec project_launch_spec(const Project& project) {
  launch::LaunchSpec spec;
  spec.image_ref = project.image_ref;
  spec.mounts = {{project.share_dir, std::string(kSharedDir)}};
  if (project.mode == ProjectMode::Notebook) {
    spec.workdir = std::string(kSharedDir);
    spec.detach = true;
    spec.ports = {{"127.0.0.1", project.port.value_or(kNotebookPort), kNotebookPort}};
    spec.command = std::vector<std::string>{"jupyter-notebook", "--ip=0.0.0.0"};
  } else {
    // Named so that the container can be resumed after the shell exits.
    spec.interactive = true;
    spec.name = "crucible-" + project.name;
  }
  return spec;
}

std::string serialize_project(const Project& p) {
  std::string out;
  out += "name=" + p.name + "\n";
  out += "image=" + p.image_ref + "\n";
  out += "mode=" + std::string(to_string(p.mode)) + "\n";
  out += "state=" + std::string(to_string(p.state)) + "\n";
  out += "share_dir=" + p.share_dir + "\n";
  out += "port=" + (p.port ? std::to_string(*p.port) : std::string()) + "\n";
  out += "container_id=" + p.container_id.value_or("") + "\n";
  out += "backend=" + p.backend + "\n";
  return out;
}

Project parse_project(std::string_view text) {
  std::map<std::string, std::string> kv;
  for (const auto& line : split(text, '\n')) {
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) corrupt("malformed line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) corrupt(std::string("missing field ") + key);
    return it->second;
  };
  Project p;
  p.name = need("name");
  p.image_ref = need("image");
  auto mode = parse_mode(need("mode"));
  auto state = parse_state(need("state"));
  if (!mode || !state) corrupt("bad mode or state in project " + p.name);
  p.mode = *mode;
  p.state = *state;
  p.share_dir = need("share_dir");
  p.backend = need("backend");
  if (const auto& port = need("port"); !port.empty()) {
    auto v = parse_int(port);
    if (!v || *v < 1 || *v > 65535) corrupt("bad port in project " + p.name);
    p.port = static_cast<int>(*v);
  }
  if (const auto& id = need("container_id"); !id.empty()) p.container_id = id;
  if (!valid_project_name(p.name)) corrupt("bad project name " + p.name);
  if (p.container_id.has_value() != (p.state != ProjectState::Created)) {
    corrupt("container id does not match state in project " + p.name);
  }
  if (p.port.has_value() != (p.mode == ProjectMode::Notebook)) {
    corrupt("port does not match mode in project " + p.name);
  }
  return p;
}

ProjectRegistry::ProjectRegistry(std::filesystem::path root) : root_(std::move(root)) {}

std::vector<Project> ProjectRegistry::list() const {
  std::vector<Project> out;
  std::error_code ec;
  if (!std::filesystem::exists(root_, ec)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(root_, ec)) {
    if (entry.path().extension() != kExt) continue;
    std::string text;
    try {
      text = read_file(entry.path());
    } catch (const Error&) {
      corrupt("unreadable record " + entry.path().string());
    }
    auto p = parse_project(text);
    if (p.name != entry.path().stem().string()) {
      corrupt("record " + entry.path().filename().string() + " names project " + p.name);
    }
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const Project& a, const Project& b) { return a.name < b.name; });
  return out;
}

std::optional<Project> ProjectRegistry::find(const std::string& name) const {
  if (!valid_project_name(name)) return std::nullopt;
  auto path = root_ / (name + std::string(kExt));
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return std::nullopt;
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error&) {
    corrupt("unreadable record " + path.string());
  }
  return parse_project(text);
}

void ProjectRegistry::put(const Project& project) const {
  write_file_atomic(root_ / (project.name + std::string(kExt)), serialize_project(project),
                    Errc::RegistryUnwritable);
}

void ProjectRegistry::erase(const std::string& name) const {
  std::error_code ec;
  std::filesystem::remove(root_ / (name + std::string(kExt)), ec);
  if (ec) throw Error(Errc::RegistryUnwritable, "cannot remove project " + name);
}

bool tcp_port_free(int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  bool ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
  ::close(fd);
  return ok;
}

ProjectManager::ProjectManager(std::filesystem::path registry_root,
                               launch::Executor& executor, Options options)
    : registry_(std::move(registry_root)), executor_(executor), options_(std::move(options)) {
  std::error_code ec;
  std::filesystem::create_directories(registry_.root(), ec);
  if (ec) {
    throw Error(Errc::RegistryUnwritable, "cannot create " + registry_.root().string());
  }
}

Project ProjectManager::get(const std::string& name) const {
  auto p = registry_.find(name);
  if (!p) throw Error(Errc::UnknownProject, name);
  return *p;
}

int ProjectManager::pick_port() const {
  std::set<int> taken;
  for (const auto& p : registry_.list()) {
    if (p.port) taken.insert(*p.port);
  }
  for (int port = kNotebookPort; port <= kLastNotebookPort; ++port) {
    if (!taken.count(port) && options_.port_probe(port)) return port;
  }
  throw Error(Errc::NoFreePort, "no free port in " + std::to_string(kNotebookPort) + "-" +
                                    std::to_string(kLastNotebookPort));
}

Project ProjectManager::create(const std::string& name, const std::string& image_ref,
                               ProjectMode mode, const std::string& share_dir) {
  if (!valid_project_name(name)) throw Error(Errc::InvalidName, name);
  FileLock lock(registry_.lock_path(), Errc::RegistryLocked, options_.lock_timeout_ms);
  if (registry_.find(name)) throw Error(Errc::NameTaken, name);
  auto kind = options_.backend.kind;
  if (kind != launch::BackendKind::Docker && kind != launch::BackendKind::Mock) {
    throw Error(Errc::UnsupportedBackend,
                std::string(launch::to_string(kind)) + " cannot host persistent projects");
  }
  if (!options_.resolver || !options_.resolver(image_ref)) {
    throw Error(Errc::ImageUnresolvable, image_ref);
  }
  Project p;
  p.name = name;
  p.image_ref = image_ref;
  p.mode = mode;
  p.share_dir = share_dir;
  p.backend = std::string(launch::to_string(kind));
  if (mode == ProjectMode::Notebook) p.port = pick_port();
  launch::validate(project_launch_spec(p));
  registry_.put(p);
  return p;
}

std::vector<std::string> ProjectManager::start_command(const Project& project) const {
  if (project.state == ProjectState::Created) {
    return launch::synthesize_command(project_launch_spec(project), options_.backend).argv;
  }
  // Resume the existing container rather than creating a new one.
  std::vector<std::string> argv{
      options_.backend.option("program", std::string(launch::to_string(options_.backend.kind))),
      "start"};
  if (project.mode == ProjectMode::Shell) argv.emplace_back("-ai");
  argv.push_back(project.container_id.value_or(""));
  return argv;
}

launch::Execution ProjectManager::run_checked(const std::vector<std::string>& argv) {
  launch::Execution exec;
  try {
    exec = executor_.execute(argv);
  } catch (const Error& e) {
    throw Error(Errc::LaunchFailed, e.what());
  }
  if (!exec.succeeded()) {
    std::string detail = argv.front() + " exited with " +
                         (exec.exit_code ? std::to_string(*exec.exit_code) : "no status");
    auto msg = first_line(exec.stderr_text);
    if (!msg.empty()) detail += ": " + msg;
    throw Error(Errc::LaunchFailed, detail);
  }
  return exec;
}

launch::Execution ProjectManager::start(const std::string& name) {
  FileLock lock(registry_.lock_path(), Errc::RegistryLocked, options_.lock_timeout_ms);
  auto p = get(name);
  if (p.state == ProjectState::Running) throw Error(Errc::AlreadyRunning, name);
  auto exec = run_checked(start_command(p));
  if (p.state == ProjectState::Created) {
    // Detached runs print the new container id; shell containers are named.
    auto tokens = split_whitespace(exec.stdout_text);
    if (p.mode == ProjectMode::Notebook && !tokens.empty()) {
      p.container_id = tokens.front();
    } else {
      p.container_id = "crucible-" + p.name;
    }
  }
  p.state = ProjectState::Running;
  registry_.put(p);
  return exec;
}

Project ProjectManager::stop(const std::string& name) {
  FileLock lock(registry_.lock_path(), Errc::RegistryLocked, options_.lock_timeout_ms);
  auto p = get(name);
  if (p.state != ProjectState::Running) throw Error(Errc::NotRunning, name);
  auto program =
      options_.backend.option("program", std::string(launch::to_string(options_.backend.kind)));
  run_checked({program, "stop", *p.container_id});
  p.state = ProjectState::Stopped;
  registry_.put(p);
  return p;
}

void ProjectManager::remove(const std::string& name, bool force) {
  FileLock lock(registry_.lock_path(), Errc::RegistryLocked, options_.lock_timeout_ms);
  auto p = get(name);
  if (p.state != ProjectState::Stopped && !force) {
    throw Error(Errc::NotStopped, name + " is " + std::string(to_string(p.state)));
  }
  auto program =
      options_.backend.option("program", std::string(launch::to_string(options_.backend.kind)));
  if (p.state == ProjectState::Running) {
    run_checked({program, "stop", *p.container_id});
  }
  if (p.container_id) run_checked({program, "rm", *p.container_id});
  registry_.erase(name);
}

}  // namespace crucible::workflows
