#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crucible/launch/executor.hpp"
#include "crucible/launch/launch_spec.hpp"

namespace crucible::workflows {

enum class ProjectState { Created, Running, Stopped };
enum class ProjectMode { Shell, Notebook };

std::string_view to_string(ProjectState state) noexcept;
std::string_view to_string(ProjectMode mode) noexcept;

inline constexpr int kNotebookPort = 8888;
inline constexpr int kLastNotebookPort = 8988;
inline constexpr std::string_view kSharedDir = "/home/fenics/shared";

struct Project {
  std::string name;
  std::string image_ref;
  ProjectMode mode = ProjectMode::Shell;
  ProjectState state = ProjectState::Created;
  std::string share_dir;
  std::optional<int> port;                  // notebook projects only
  std::optional<std::string> container_id;  // absent while created
  std::string backend = "docker";

  friend bool operator==(const Project&, const Project&) = default;
};

bool valid_project_name(std::string_view name);

/// `http://127.0.0.1:<port>` for notebook projects.
std::string notebook_url(const Project& project);

/// Launch description for a project's first start.
launch::LaunchSpec project_launch_spec(const Project& project);

// On-disk registry: one `<name>.project` file per project plus a lock file.
class ProjectRegistry {
 public:
  explicit ProjectRegistry(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  /// Sorted by name. Throws RegistryCorrupt on unreadable records.
  std::vector<Project> list() const;
  std::optional<Project> find(const std::string& name) const;
  void put(const Project& project) const;
  void erase(const std::string& name) const;

  std::filesystem::path lock_path() const { return root_ / ".lock"; }

 private:
  std::filesystem::path root_;
};

std::string serialize_project(const Project& project);
/// Throws RegistryCorrupt.
Project parse_project(std::string_view text);

/// Returns true when the port can be bound on 127.0.0.1.
using PortProbe = std::function<bool(int port)>;
bool tcp_port_free(int port);

/// Returns true when the image reference can be resolved.
using ImageResolver = std::function<bool(const std::string& ref)>;

class ProjectManager {
 public:
  struct Options {
    launch::Backend backend;
    ImageResolver resolver;
    PortProbe port_probe = tcp_port_free;
    int lock_timeout_ms = 5000;
  };

  ProjectManager(std::filesystem::path registry_root, launch::Executor& executor,
                 Options options);

  Project create(const std::string& name, const std::string& image_ref, ProjectMode mode,
                 const std::string& share_dir);
  launch::Execution start(const std::string& name);
  Project stop(const std::string& name);
  void remove(const std::string& name, bool force);

  Project get(const std::string& name) const;
  std::vector<Project> list() const { return registry_.list(); }

  /// The exact argument vector `start` would run now.
  std::vector<std::string> start_command(const Project& project) const;

 private:
  launch::Execution run_checked(const std::vector<std::string>& argv);
  int pick_port() const;

  ProjectRegistry registry_;
  launch::Executor& executor_;
  Options options_;
};

}  // namespace crucible::workflows
