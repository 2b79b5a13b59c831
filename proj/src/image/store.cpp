#include "crucible/image/store.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "crucible/error.hpp"

namespace crucible::image {

namespace {

std::optional<DirectiveKind> kind_from_name(std::string_view name) {
  for (auto k : {DirectiveKind::From, DirectiveKind::User, DirectiveKind::Run,
                 DirectiveKind::Env, DirectiveKind::Workdir,
                 DirectiveKind::Copy}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::vector<std::string> nonempty_lines(std::string_view text) {
  std::vector<std::string> out;
  for (auto& line : split(text, '\n')) {
    auto t = trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

bool valid_id(std::string_view id) { return id.size() == 64 && is_hex(id); }

}  // namespace

std::string layer_id(std::string_view parent_id, const Directive& directive,
                     std::uint64_t size_bytes) {
  std::string buf(parent_id);
  buf.push_back('\n');
  buf += directive.canonical();
  buf.push_back('\n');
  buf += std::to_string(size_bytes);
  return sha256_hex(buf);
}

std::uint64_t synthetic_size(const Directive& directive) {
  if (directive.kind == DirectiveKind::From) return 0;
  return 1024ULL * directive.argument.size();
}

std::string serialize_layer(const Layer& layer) {
  std::string out;
  out += layer.id + "\n";
  out += layer.parent_id + "\n";
  out += std::string(to_string(layer.directive.kind)) + "\n";
  out += layer.directive.argument + "\n";
  out += std::to_string(layer.size_bytes) + "\n";
  return out;
}

Layer parse_layer(std::string_view text, Errc on_failure) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.size() != 5) {
    throw Error(on_failure, "layer record must have 5 lines");
  }
  auto kind = kind_from_name(lines[2]);
  auto size = parse_int(lines[4]);
  if (!kind || !size || *size < 0 || !valid_id(lines[0]) ||
      (!lines[1].empty() && !valid_id(lines[1]))) {
    throw Error(on_failure, "malformed layer record for " + lines[0]);
  }
  return Layer{lines[0], lines[1], Directive{*kind, lines[3]},
               static_cast<std::uint64_t>(*size)};
}

bool valid_tag_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '.' ||
           c == '-' || c == '_' || c == '/' || c == ':';
  });
}

Store::Store(fs::path root, FileLock lock)
    : root_(std::move(root)), lock_(std::move(lock)) {}

Store Store::open(const fs::path& root, int lock_timeout_ms) {
  std::error_code ec;
  fs::create_directories(root / "layers", ec);
  fs::create_directories(root / "images", ec);
  if (ec || !fs::is_directory(root / "layers")) {
    throw Error(Errc::StoreUnwritable, "cannot create store at " + root.string());
  }
  Store store(root, FileLock(root / "lock", Errc::StoreLocked, lock_timeout_ms));
  store.load();
  return store;
}

void Store::load() {
  for (const auto& entry : fs::directory_iterator(root_ / "layers")) {
    if (entry.path().extension() != ".layer") continue;
    auto layer = parse_layer(read_file(entry.path()), Errc::StoreCorrupt);
    if (entry.path().stem() != layer.id ||
        layer_id(layer.parent_id, layer.directive, layer.size_bytes) != layer.id) {
      throw Error(Errc::StoreCorrupt, "hash mismatch for layer " + layer.id);
    }
    layers_.emplace(layer.id, std::move(layer));
  }
  for (const auto& [id, layer] : layers_) {
    if (!layer.parent_id.empty() && !layers_.count(layer.parent_id)) {
      throw Error(Errc::StoreCorrupt, "layer " + id + " has missing parent");
    }
  }

  for (const auto& entry : fs::directory_iterator(root_ / "images")) {
    if (entry.path().extension() != ".image") continue;
    auto lines = nonempty_lines(read_file(entry.path()));
    if (lines.size() < 2 || entry.path().stem() != lines[0]) {
      throw Error(Errc::StoreCorrupt, "malformed image " + entry.path().string());
    }
    Image img{lines[0], {lines.begin() + 1, lines.end()}};
    if (img.layers.back() != img.id) {
      throw Error(Errc::StoreCorrupt, "image id is not its top layer: " + img.id);
    }
    std::string parent;
    for (const auto& lid : img.layers) {
      auto* layer = find_layer(lid);
      if (!layer || layer->parent_id != parent) {
        throw Error(Errc::StoreCorrupt, "broken layer chain in image " + img.id);
      }
      parent = lid;
    }
    images_.emplace(img.id, std::move(img));
  }

  if (fs::exists(root_ / "tags")) {
    for (const auto& line : nonempty_lines(read_file(root_ / "tags"))) {
      auto fields = split(line, '\t');
      if (fields.size() != 2 || !images_.count(fields[1])) {
        throw Error(Errc::StoreCorrupt, "bad tag entry: " + line);
      }
      tags_[fields[0]] = fields[1];
    }
  }
}

const Layer* Store::find_layer(std::string_view id) const {
  auto it = layers_.find(std::string(id));
  return it == layers_.end() ? nullptr : &it->second;
}

const Image* Store::find_image(std::string_view id) const {
  auto it = images_.find(std::string(id));
  return it == images_.end() ? nullptr : &it->second;
}

std::vector<std::string> Store::tags_for(std::string_view image_id) const {
  std::vector<std::string> out;
  for (const auto& [name, id] : tags_) {
    if (id == image_id) out.push_back(name);
  }
  return out;
}

std::optional<std::string> Store::lookup_tag(std::string_view name) const {
  if (auto it = tags_.find(std::string(name)); it != tags_.end()) {
    return it->second;
  }
  auto slash = name.rfind('/');
  auto colon = name.rfind(':');
  bool has_tag = colon != std::string_view::npos &&
                 (slash == std::string_view::npos || colon > slash);
  if (!has_tag) {
    if (auto it = tags_.find(std::string(name) + ":latest"); it != tags_.end()) {
      return it->second;
    }
  }
  return std::nullopt;
}

std::string Store::resolve_image(std::string_view ref) const {
  if (auto id = lookup_tag(ref)) return *id;
  if (ref.empty() || !is_hex(ref)) {
    throw Error(Errc::UnknownImage, std::string(ref));
  }
  std::vector<std::string> matches;
  for (auto it = images_.lower_bound(std::string(ref));
       it != images_.end() && it->first.compare(0, ref.size(), ref) == 0; ++it) {
    matches.push_back(it->first);
  }
  if (matches.size() > 1) {
    throw Error(Errc::AmbiguousPrefix,
                std::string(ref) + " matches " + std::to_string(matches.size()) +
                    " images");
  }
  if (matches.empty()) throw Error(Errc::UnknownImage, std::string(ref));
  if (ref.size() < kMinPrefixLength) {
    throw Error(Errc::UnknownImage,
                std::string(ref) + ": id prefixes need at least " +
                    std::to_string(kMinPrefixLength) + " characters");
  }
  return matches.front();
}

bool Store::add_layer(const Layer& layer) {
  if (layers_.count(layer.id)) return false;
  if (!layer.parent_id.empty() && !layers_.count(layer.parent_id)) {
    throw Error(Errc::StoreCorrupt, "parent of " + layer.id + " not stored");
  }
  write_file_atomic(root_ / "layers" / (layer.id + ".layer"),
                    serialize_layer(layer), Errc::StoreUnwritable);
  layers_.emplace(layer.id, layer);
  return true;
}

void Store::add_image(const Image& image) {
  if (images_.count(image.id)) return;
  if (image.layers.empty() || image.layers.back() != image.id) {
    throw Error(Errc::StoreCorrupt, "image id must equal its top layer");
  }
  std::string parent;
  for (const auto& lid : image.layers) {
    auto* layer = find_layer(lid);
    if (!layer || layer->parent_id != parent) {
      throw Error(Errc::StoreCorrupt, "broken layer chain for image " + image.id);
    }
    parent = lid;
  }
  std::string body = image.id + "\n";
  for (const auto& lid : image.layers) body += lid + "\n";
  write_file_atomic(root_ / "images" / (image.id + ".image"), body,
                    Errc::StoreUnwritable);
  images_.emplace(image.id, image);
}

void Store::set_tag(const std::string& name, const std::string& image_id) {
  if (!valid_tag_name(name)) throw Error(Errc::InvalidTagName, name);
  if (!images_.count(image_id)) throw Error(Errc::UnknownImage, image_id);
  auto it = tags_.find(name);
  if (it != tags_.end() && it->second == image_id) return;
  tags_[name] = image_id;
  write_tags();
}

void Store::write_tags() const {
  std::string body;
  for (const auto& [name, id] : tags_) body += name + "\t" + id + "\n";
  write_file_atomic(root_ / "tags", body, Errc::StoreUnwritable);
}

BuildResult build_image(const Recipe& recipe, Store& store,
                        const std::optional<fs::path>& registry) {
  if (recipe.directives.empty() ||
      recipe.directives.front().kind != DirectiveKind::From) {
    throw Error(Errc::FromNotFirst, "recipe must start with FROM");
  }
  BuildResult result;
  const auto& base_ref = recipe.directives.front().argument;

  auto base = store.lookup_tag(base_ref);
  if (!base && registry) {
    if (!registry_has(*registry, base_ref)) {
      throw Error(Errc::BaseImageUnresolvable,
                  base_ref + " is neither stored nor in " + registry->string());
    }
    base = pull_image(*registry, base_ref, store).image.id;
  }

  std::vector<std::string> chain;
  std::string parent;
  if (base) {
    chain = store.find_image(*base)->layers;
    parent = *base;
  } else {
    result.warnings.push_back("base image " + base_ref +
                              " not found; using a synthetic empty base layer");
  }

  for (const auto& directive : recipe.directives) {
    auto size = synthetic_size(directive);
    Layer layer{layer_id(parent, directive, size), parent, directive, size};
    if (store.add_layer(layer)) {
      ++result.new_layers;
    } else {
      ++result.reused_layers;
    }
    chain.push_back(layer.id);
    parent = layer.id;
  }

  result.image = Image{parent, std::move(chain)};
  store.add_image(result.image);
  return result;
}

std::string tag_image(Store& store, std::string_view ref,
                      const std::string& name) {
  if (!valid_tag_name(name)) throw Error(Errc::InvalidTagName, name);
  auto id = store.resolve_image(ref);
  store.set_tag(name, id);
  return id;
}

Reference parse_reference(std::string_view ref) {
  auto slash = ref.rfind('/');
  auto colon = ref.rfind(':');
  if (colon != std::string_view::npos &&
      (slash == std::string_view::npos || colon > slash)) {
    return {std::string(ref.substr(0, colon)), std::string(ref.substr(colon + 1))};
  }
  return {std::string(ref), "latest"};
}

namespace {

fs::path manifest_path(const fs::path& registry, const Reference& ref) {
  if (ref.name.empty() || ref.tag.empty() || ref.name.front() == '/' ||
      !valid_tag_name(ref.str())) {
    throw Error(Errc::UnknownReference, ref.str());
  }
  for (const auto& part : split(ref.name, '/')) {
    if (part.empty() || part == "." || part == "..") {
      throw Error(Errc::UnknownReference, ref.str());
    }
  }
  return registry / "manifest" / ref.name / ref.tag;
}

}  // namespace

bool registry_has(const fs::path& registry, std::string_view reference) {
  try {
    return fs::is_regular_file(manifest_path(registry, parse_reference(reference)));
  } catch (const Error&) {
    return false;
  }
}

PullResult pull_image(const fs::path& registry, std::string_view reference,
                      Store& store) {
  auto ref = parse_reference(reference);
  auto manifest = manifest_path(registry, ref);
  if (!fs::is_regular_file(manifest)) {
    throw Error(Errc::UnknownReference, ref.str() + " not in " + registry.string());
  }
  auto ids = nonempty_lines(read_file(manifest));
  if (ids.empty()) throw Error(Errc::CorruptManifest, ref.str() + ": no layers");

  // Verify the whole chain before touching the store.
  std::vector<Layer> chain;
  std::string parent;
  for (const auto& id : ids) {
    if (!valid_id(id)) throw Error(Errc::CorruptManifest, "bad layer id " + id);
    auto path = registry / "layers" / (id + ".layer");
    if (!fs::is_regular_file(path)) {
      throw Error(Errc::CorruptManifest, "missing layer " + id);
    }
    auto layer = parse_layer(read_file(path), Errc::CorruptManifest);
    if (layer.id != id ||
        layer_id(layer.parent_id, layer.directive, layer.size_bytes) != id) {
      throw Error(Errc::CorruptManifest, "layer " + short_id(id) +
                                             " does not match its content hash");
    }
    if (layer.parent_id != parent) {
      throw Error(Errc::CorruptManifest, "layer " + short_id(id) +
                                             " is out of order in the manifest");
    }
    parent = id;
    chain.push_back(std::move(layer));
  }

  PullResult result;
  for (const auto& layer : chain) {
    if (store.add_layer(layer)) {
      ++result.copied;
    } else {
      ++result.skipped;
    }
  }
  result.image = Image{ids.back(), ids};
  store.add_image(result.image);
  store.set_tag(ref.str(), result.image.id);
  return result;
}

Usage store_usage(const Store& store) {
  Usage usage;
  usage.distinct_layers = store.layers().size();
  for (const auto& [id, layer] : store.layers()) usage.total_bytes += layer.size_bytes;
  std::uint64_t logical_sum = 0;
  for (const auto& [id, image] : store.images()) {
    std::uint64_t bytes = 0;
    for (const auto& lid : image.layers) bytes += store.find_layer(lid)->size_bytes;
    usage.per_image_logical_bytes[id] = bytes;
    logical_sum += bytes;
  }
  usage.shared_bytes =
      logical_sum > usage.total_bytes ? logical_sum - usage.total_bytes : 0;
  return usage;
}

}  // namespace crucible::image
