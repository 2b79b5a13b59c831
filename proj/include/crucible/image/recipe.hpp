#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crucible::image {

enum class DirectiveKind { From, User, Run, Env, Workdir, Copy };

std::string_view to_string(DirectiveKind kind) noexcept;

struct Directive {
  DirectiveKind kind;
  std::string argument;  // one logical line, continuations folded

  /// `KIND argument`, the form that feeds layer hashes and recipe digests.
  std::string canonical() const;

  friend bool operator==(const Directive&, const Directive&) = default;
};

struct Recipe {
  std::vector<Directive> directives;
  std::string source_digest;  // sha256 of the canonical text
};

/// Parses a Dockerfile-subset recipe (FROM, USER, RUN, ENV, WORKDIR, COPY).
///
/// Continuation lines ending in a backslash are folded into one logical line
/// with a single space at each join. Lines whose first non-blank character is
/// `#` and blank lines are dropped, including inside a continuation. Keywords
/// are case-insensitive. CRLF is normalized and trailing whitespace stripped
/// before anything else, so the digest is stable across platforms.
///
/// Throws Error with EmptyRecipe, UnknownDirective, MissingArgument,
/// FromNotFirst or MultipleFrom.
Recipe parse_recipe(std::string_view text);

/// Canonical text: one `KIND argument` line per directive, joined by `\n`.
std::string canonical_text(const std::vector<Directive>& directives);

}  // namespace crucible::image
