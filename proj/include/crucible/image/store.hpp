#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crucible/image/recipe.hpp"
#include "crucible/util.hpp"

namespace crucible::image {

/// Number of hex characters shown for ids in listings (e.g. d366b85a7fdb).
inline constexpr std::size_t kShortIdLength = 12;
/// Shortest id prefix accepted when resolving images.
inline constexpr std::size_t kMinPrefixLength = 6;

struct Layer {
  std::string id;
  std::string parent_id;  // empty for base layers
  Directive directive;
  std::uint64_t size_bytes = 0;

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct Image {
  std::string id;                   // == layers.back()
  std::vector<std::string> layers;  // base first

  friend bool operator==(const Image&, const Image&) = default;
};

/// sha256 over `parent ∥ '\n' ∥ KIND ' ' argument ∥ '\n' ∥ decimal(size)`.
std::string layer_id(std::string_view parent_id, const Directive& directive,
                     std::uint64_t size_bytes);

/// Synthetic payload size: 1024 bytes per argument byte, zero for FROM.
std::uint64_t synthetic_size(const Directive& directive);

inline std::string short_id(std::string_view id) {
  return std::string(id.substr(0, kShortIdLength));
}

/// Line-oriented layer record: id, parent, kind, argument, size.
std::string serialize_layer(const Layer& layer);
/// Parses a layer record; throws Error(`on_failure`) when malformed.
Layer parse_layer(std::string_view text, Errc on_failure);

bool valid_tag_name(std::string_view name);

// On-disk content-addressed store:
//   <root>/layers/<id>.layer, <root>/images/<id>.image, <root>/tags
//
// Opening a store takes the exclusive `<root>/lock` for the store's lifetime;
// every mutation is written through to disk immediately.
class Store {
 public:
  static Store open(const fs::path& root, int lock_timeout_ms = 5000);

  const fs::path& root() const { return root_; }
  const std::map<std::string, Layer>& layers() const { return layers_; }
  const std::map<std::string, Image>& images() const { return images_; }
  const std::map<std::string, std::string>& tags() const { return tags_; }

  const Layer* find_layer(std::string_view id) const;
  const Image* find_image(std::string_view id) const;
  std::vector<std::string> tags_for(std::string_view image_id) const;

  /// Exact tag lookup; a reference without `:tag` also matches `<ref>:latest`.
  std::optional<std::string> lookup_tag(std::string_view name) const;

  /// Resolves a tag name, a full id or a unique id prefix (>= 6 hex chars).
  /// Throws AmbiguousPrefix or UnknownImage.
  std::string resolve_image(std::string_view ref) const;

  /// Stores the layer unless an identical id is present; returns true when
  /// the layer was newly written. The parent must already be stored.
  bool add_layer(const Layer& layer);
  void add_image(const Image& image);
  void set_tag(const std::string& name, const std::string& image_id);

 private:
  Store(fs::path root, FileLock lock);
  void load();
  void write_tags() const;

  fs::path root_;
  FileLock lock_;
  std::map<std::string, Layer> layers_;
  std::map<std::string, Image> images_;
  std::map<std::string, std::string> tags_;
};

struct BuildResult {
  Image image;
  std::size_t new_layers = 0;
  std::size_t reused_layers = 0;
  std::vector<std::string> warnings;
};

/// Builds one layer per directive into `store`. A FROM reference found in the
/// store's tags stacks on that image; otherwise it is pulled from `registry`
/// when one is given (BaseImageUnresolvable if absent there), or becomes a
/// zero-size synthetic base layer with a warning when no registry is set.
BuildResult build_image(const Recipe& recipe, Store& store,
                        const std::optional<fs::path>& registry = std::nullopt);

/// Points `name` at the image `ref` resolves to. Retagging moves the name.
/// Returns the resolved full id.
std::string tag_image(Store& store, std::string_view ref,
                      const std::string& name);

struct Reference {
  std::string name;
  std::string tag = "latest";

  std::string str() const { return name + ":" + tag; }
};

/// Splits `name[:tag]`; the tag separator is the last ':' after the last '/'.
Reference parse_reference(std::string_view ref);

struct PullResult {
  Image image;
  std::size_t copied = 0;
  std::size_t skipped = 0;
};

/// Imports `reference` from a registry directory laid out as
/// `manifest/<name>/<tag>` (layer ids, base first) plus `layers/<id>.layer`.
/// Every layer is integrity-checked against its recomputed hash before
/// anything is copied. Throws UnknownReference or CorruptManifest.
PullResult pull_image(const fs::path& registry, std::string_view reference,
                      Store& store);

bool registry_has(const fs::path& registry, std::string_view reference);

struct Usage {
  std::size_t distinct_layers = 0;
  std::uint64_t total_bytes = 0;
  std::map<std::string, std::uint64_t> per_image_logical_bytes;
  std::uint64_t shared_bytes = 0;

  friend bool operator==(const Usage&, const Usage&) = default;
};

Usage store_usage(const Store& store);

}  // namespace crucible::image
