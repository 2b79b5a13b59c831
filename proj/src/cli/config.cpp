#include "crucible/cli/config.hpp"

#include <cstdlib>
#include <set>

#include "crucible/error.hpp"
#include "crucible/util.hpp"
#include "json.hpp"

namespace crucible::cli {

namespace {

using json = nlohmann::json;

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidConfig, what); }

std::string string_field(const json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_string() || v.get<std::string>().empty()) {
    invalid(std::string(key) + " must be a non-empty string");
  }
  return v.get<std::string>();
}

std::filesystem::path path_field(const json& doc, const char* key,
                                 const std::filesystem::path& dir) {
  std::filesystem::path p = string_field(doc, key);
  return p.is_absolute() ? p : dir / p;
}

}  // namespace

std::filesystem::path config_path() {
  if (const char* p = std::getenv("CRUCIBLE_CONFIG"); p && *p) return p;
  if (const char* x = std::getenv("XDG_CONFIG_HOME"); x && *x) {
    return std::filesystem::path(x) / "crucible" / "config.json";
  }
  const char* home = std::getenv("HOME");
  return std::filesystem::path(home && *home ? home : ".") / ".config" / "crucible" /
         "config.json";
}

Config parse_config(std::string_view json_text, const std::filesystem::path& config_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    invalid(e.what());
  }
  if (!doc.is_object()) invalid("config must be a JSON object");
  static const std::set<std::string> known{
      "store_root",   "registry_path", "abi_table_path", "default_backend",
      "default_image", "projects_root", "mock_fixture",   "backend_options"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.count(key)) invalid("unknown key '" + key + "'");
  }

  Config c;
  c.store_root = config_dir / "store";
  c.projects_root = config_dir / "projects";
  if (doc.contains("store_root")) c.store_root = path_field(doc, "store_root", config_dir);
  if (doc.contains("projects_root")) {
    c.projects_root = path_field(doc, "projects_root", config_dir);
  }
  if (doc.contains("registry_path")) {
    c.registry_path = path_field(doc, "registry_path", config_dir);
  }
  if (doc.contains("abi_table_path")) {
    c.abi_table_path = path_field(doc, "abi_table_path", config_dir);
  }
  if (doc.contains("mock_fixture")) c.mock_fixture = path_field(doc, "mock_fixture", config_dir);
  if (doc.contains("default_image")) c.default_image = string_field(doc, "default_image");
  if (doc.contains("default_backend")) {
    auto name = string_field(doc, "default_backend");
    try {
      c.default_backend = launch::parse_backend_kind(name);
    } catch (const Error&) {
      invalid("unknown default_backend '" + name + "'");
    }
  }
  if (doc.contains("backend_options")) {
    const auto& opts = doc["backend_options"];
    if (!opts.is_object()) invalid("backend_options must be an object");
    for (const auto& [k, v] : opts.items()) {
      if (!v.is_string()) invalid("backend_options." + k + " must be a string");
      c.backend_options[k] = v.get<std::string>();
    }
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return parse_config("{}", dir);
  return parse_config(read_file(path), dir);
}

}  // namespace crucible::cli
