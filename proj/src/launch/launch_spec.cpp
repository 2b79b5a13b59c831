#include "crucible/launch/launch_spec.hpp"

#include <cctype>

#include "crucible/error.hpp"
#include "crucible/util.hpp"

namespace crucible::launch {

namespace {

bool host_path_ok(std::string_view p) {
  if (p == kPwd) return true;
  if (p.substr(0, kPwd.size()) == kPwd) return p[kPwd.size()] == '/';
  return !p.empty() && p.front() == '/';
}

bool container_path_ok(std::string_view p) { return !p.empty() && p.front() == '/'; }

bool dotted_quad(std::string_view ip) {
  auto parts = split(ip, '.');
  if (parts.size() != 4) return false;
  for (const auto& part : parts) {
    if (part.empty() || part.size() > 3) return false;
    auto v = parse_int(part);
    if (!v || *v < 0 || *v > 255) return false;
  }
  return true;
}

bool container_name_ok(std::string_view name) {
  if (name.empty() || !std::isalnum(static_cast<unsigned char>(name.front()))) return false;
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) &&
        std::string_view("_.-").find(c) == std::string_view::npos) {
      return false;
    }
  }
  return true;
}

bool env_name_ok(std::string_view name) {
  if (name.empty() || std::isdigit(static_cast<unsigned char>(name.front()))) {
    return false;
  }
  for (char c : name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(Errc::InvalidLaunchSpec, what); }

[[noreturn]] void unsupported(BackendKind kind, std::string_view field,
                 std::string_view hint = {}) {
  std::string msg = std::string(to_string(kind)) + " does not support " +
                    std::string(field);
  if (!hint.empty()) msg += " (" + std::string(hint) + ")";
  throw Error(Errc::UnsupportedFeature, msg);
}

bool has_command(const LaunchSpec& spec) {
  return spec.command && !spec.command->empty();
}

std::string port_arg(const PortMapping& p) {
  std::string out;
  if (!p.host_ip.empty()) out = p.host_ip + ":";
  return out + std::to_string(p.host_port) + ":" + std::to_string(p.container_port);
}

std::vector<std::string> render_docker(const LaunchSpec& spec,
                                       const std::string& program) {
  std::vector<std::string> argv{program, "run"};
  if (spec.interactive) argv.emplace_back("-ti");
  if (spec.name) {
    argv.emplace_back("--name");
    argv.push_back(*spec.name);
  }
  if (spec.workdir) {
    argv.emplace_back("-w");
    argv.push_back(*spec.workdir);
  }
  for (const auto& m : spec.mounts) {
    argv.emplace_back("-v");
    argv.push_back(m.host_path + ":" + m.container_path);
  }
  if (spec.detach) argv.emplace_back("-d");
  for (const auto& p : spec.ports) {
    argv.emplace_back("-p");
    argv.push_back(port_arg(p));
  }
  for (const auto& e : spec.env) {
    argv.emplace_back("-e");
    argv.push_back(e.name + "=" + e.value);
  }
  argv.push_back(spec.image_ref);
  if (spec.command) argv.insert(argv.end(), spec.command->begin(), spec.command->end());
  return argv;
}

std::vector<std::string> render_rkt(const LaunchSpec& spec, const std::string& program) {
  if (spec.detach) unsupported(BackendKind::Rkt, "detach");
  if (spec.name) unsupported(BackendKind::Rkt, "name");
  if (!spec.ports.empty()) unsupported(BackendKind::Rkt, "ports");
  std::vector<std::string> argv{program, "run"};
  if (spec.interactive) argv.emplace_back("--interactive");
  for (std::size_t i = 0; i < spec.mounts.size(); ++i) {
    argv.push_back("--volume=vol" + std::to_string(i) +
                   ",kind=host,source=" + spec.mounts[i].host_path);
  }
  argv.push_back(spec.image_ref);
  if (spec.workdir) argv.push_back("--working-dir=" + *spec.workdir);
  for (std::size_t i = 0; i < spec.mounts.size(); ++i) {
    argv.push_back("--mount=volume=vol" + std::to_string(i) +
                   ",target=" + spec.mounts[i].container_path);
  }
  for (const auto& e : spec.env) argv.push_back("--set-env=" + e.name + "=" + e.value);
  if (has_command(spec)) {
    argv.emplace_back("--exec");
    argv.push_back(spec.command->front());
    argv.emplace_back("--");
    argv.insert(argv.end(), spec.command->begin() + 1, spec.command->end());
  }
  return argv;
}

std::vector<std::string> render_shifter(const LaunchSpec& spec, const Backend& backend) {
  if (spec.detach) unsupported(BackendKind::Shifter, "detach");
  if (spec.name) unsupported(BackendKind::Shifter, "name");
  if (!spec.mounts.empty()) unsupported(BackendKind::Shifter, "mounts");
  if (!spec.ports.empty()) unsupported(BackendKind::Shifter, "ports");
  if (spec.workdir) unsupported(BackendKind::Shifter, "workdir");
  if (!spec.env.empty()) {
    unsupported(BackendKind::Shifter, "env", "inject environment with an HPC job plan");
  }
  std::string format = backend.option("image_format", "docker");
  std::string ref = spec.image_ref;
  if (ref.rfind(format + ":", 0) != 0) ref = format + ":" + ref;
  std::vector<std::string> argv{backend.option("program", "shifter"), "--image=" + ref};
  if (spec.command) argv.insert(argv.end(), spec.command->begin(), spec.command->end());
  return argv;
}

}  // namespace

std::string_view to_string(BackendKind kind) noexcept {
  switch (kind) {
    case BackendKind::Docker: return "docker";
    case BackendKind::Rkt: return "rkt";
    case BackendKind::Shifter: return "shifter";
    case BackendKind::Native: return "native";
    case BackendKind::Mock: return "mock";
  }
  return "?";
}

BackendKind parse_backend_kind(std::string_view name) {
  for (auto k : {BackendKind::Docker, BackendKind::Rkt, BackendKind::Shifter,
                 BackendKind::Native, BackendKind::Mock}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::UnsupportedBackend, std::string(name));
}

std::string Backend::option(const std::string& key, std::string fallback) const {
  auto it = options.find(key);
  return it == options.end() ? fallback : it->second;
}

void validate(const LaunchSpec& spec) {
  if (spec.interactive && spec.detach) invalid("interactive and detach are exclusive");
  if (!spec.image_ref.empty() &&
      (spec.image_ref.front() == '-' ||
       spec.image_ref.find_first_of(" \t\n") != std::string::npos)) {
    invalid("bad image reference: " + spec.image_ref);
  }
  if (spec.name && !container_name_ok(*spec.name)) invalid("bad container name: " + *spec.name);
  if (spec.workdir && !container_path_ok(*spec.workdir)) {
    invalid("workdir must be absolute: " + *spec.workdir);
  }
  for (const auto& m : spec.mounts) {
    if (!host_path_ok(m.host_path) || m.host_path.find(':') != std::string::npos) {
      invalid("host path must be absolute or $(pwd): " + m.host_path);
    }
    if (!container_path_ok(m.container_path) ||
        m.container_path.find(':') != std::string::npos) {
      invalid("container path must be absolute: " + m.container_path);
    }
  }
  for (const auto& p : spec.ports) {
    if (p.host_port < 1 || p.host_port > 65535 || p.container_port < 1 ||
        p.container_port > 65535) {
      invalid("port out of range 1-65535");
    }
    if (!p.host_ip.empty() && !dotted_quad(p.host_ip)) {
      invalid("host ip must be a dotted quad: " + p.host_ip);
    }
  }
  for (const auto& e : spec.env) {
    if (!env_name_ok(e.name)) invalid("bad environment variable name: " + e.name);
  }
}

RenderedCommand synthesize_command(const LaunchSpec& spec, const Backend& backend) {
  validate(spec);
  RenderedCommand out;
  if (backend.kind != BackendKind::Native && spec.image_ref.empty()) {
    invalid("image reference required for " + std::string(to_string(backend.kind)));
  }
  switch (backend.kind) {
    case BackendKind::Docker:
      out.argv = render_docker(spec, backend.option("program", "docker"));
      break;
    case BackendKind::Mock:
      out.argv = render_docker(spec, backend.option("program", "mock"));
      break;
    case BackendKind::Rkt:
      out.argv = render_rkt(spec, backend.option("program", "rkt"));
      break;
    case BackendKind::Shifter:
      out.argv = render_shifter(spec, backend);
      break;
    case BackendKind::Native:
      if (spec.detach) unsupported(BackendKind::Native, "detach");
      if (spec.name) unsupported(BackendKind::Native, "name");
      if (!spec.mounts.empty()) unsupported(BackendKind::Native, "mounts");
      if (!spec.ports.empty()) unsupported(BackendKind::Native, "ports");
      if (spec.workdir) unsupported(BackendKind::Native, "workdir");
      if (!spec.env.empty()) unsupported(BackendKind::Native, "env");
      if (!has_command(spec)) {
        throw Error(Errc::EmptyCommandForNative, "native launches need a command");
      }
      if (!spec.image_ref.empty()) {
        out.warnings.push_back("native backend ignores image " + spec.image_ref);
      }
      out.argv = *spec.command;
      break;
  }
  return out;
}

namespace {

bool shell_safe(std::string_view s) {
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) &&
        std::string_view("_@%+=:,./-").find(c) == std::string_view::npos) {
      return false;
    }
  }
  return true;
}

std::string single_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out.push_back(c);
  }
  return out + "'";
}

// Length of a shell expansion starting at `pos`: `$(pwd)`, `$NAME` or
// `${NAME}`. Zero when there is none.
std::size_t expansion_length(std::string_view arg, std::size_t pos) {
  if (arg.substr(pos, kPwd.size()) == kPwd) return kPwd.size();
  if (arg[pos] != '$' || pos + 1 >= arg.size()) return 0;
  auto name_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  if (arg[pos + 1] == '{') {
    auto close = arg.find('}', pos + 2);
    if (close == std::string_view::npos || close == pos + 2) return 0;
    for (auto i = pos + 2; i < close; ++i) {
      if (!name_char(arg[i])) return 0;
    }
    return close - pos + 1;
  }
  if (std::isdigit(static_cast<unsigned char>(arg[pos + 1])) || !name_char(arg[pos + 1])) {
    return 0;
  }
  auto end = pos + 1;
  while (end < arg.size() && name_char(arg[end])) ++end;
  return end - pos;
}

std::string quote_arg(std::string_view arg) {
  if (arg.empty()) return "''";
  std::string out;
  std::string segment;
  auto flush = [&] {
    if (!segment.empty()) out += shell_safe(segment) ? segment : single_quote(segment);
    segment.clear();
  };
  for (std::size_t pos = 0; pos < arg.size();) {
    if (auto n = expansion_length(arg, pos)) {
      flush();
      out += arg.substr(pos, n);
      pos += n;
    } else {
      segment.push_back(arg[pos++]);
    }
  }
  flush();
  return out;
}

}  // namespace

std::string shell_line(std::span<const std::string> argv) {
  std::string out;
  for (std::size_t i = 0; i < argv.size(); ++i) {
    if (i) out.push_back(' ');
    out += quote_arg(argv[i]);
  }
  return out;
}

}  // namespace crucible::launch
