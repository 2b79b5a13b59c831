#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "crucible/launch/launch_spec.hpp"

namespace crucible::cli {

struct Config {
  std::filesystem::path store_root;
  std::optional<std::filesystem::path> registry_path;
  std::optional<std::filesystem::path> abi_table_path;
  launch::BackendKind default_backend = launch::BackendKind::Docker;
  std::string default_image = "quay.io/fenicsproject/stable";
  std::filesystem::path projects_root;
  std::optional<std::filesystem::path> mock_fixture;  // answers for the mock backend
  std::map<std::string, std::string> backend_options;

  launch::Backend backend(launch::BackendKind kind) const { return {kind, backend_options}; }
};

/// Where the config file lives: $CRUCIBLE_CONFIG, else
/// $XDG_CONFIG_HOME/crucible/config.json, else ~/.config/crucible/config.json.
std::filesystem::path config_path();

/// Parses a JSON config. Relative paths resolve against `config_dir`, which
/// also holds the default store and project roots. Throws InvalidConfig.
Config parse_config(std::string_view json_text, const std::filesystem::path& config_dir);

/// Loads `path`; a missing file yields the defaults.
Config load_config(const std::filesystem::path& path);

}  // namespace crucible::cli
