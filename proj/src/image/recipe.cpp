#include "crucible/image/recipe.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "crucible/error.hpp"
#include "crucible/util.hpp"

namespace crucible::image {

namespace {

std::optional<DirectiveKind> keyword_kind(std::string_view word) {
  std::string upper(word);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  if (upper == "FROM") return DirectiveKind::From;
  if (upper == "USER") return DirectiveKind::User;
  if (upper == "RUN") return DirectiveKind::Run;
  if (upper == "ENV") return DirectiveKind::Env;
  if (upper == "WORKDIR") return DirectiveKind::Workdir;
  if (upper == "COPY") return DirectiveKind::Copy;
  return std::nullopt;
}

bool is_comment(std::string_view line) {
  auto t = trim(line);
  return !t.empty() && t.front() == '#';
}

// Folds physical lines into logical ones, dropping comments and blanks.
std::vector<std::string> logical_lines(std::string_view text) {
  std::string normalized;
  normalized.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    normalized.push_back(text[i]);
  }

  std::vector<std::string> out;
  std::string pending;
  bool continuing = false;
  for (const auto& raw : split(normalized, '\n')) {
    std::string_view line = trim_right(raw);
    if (is_comment(line) || trim(line).empty()) continue;

    bool continues = !line.empty() && line.back() == '\\';
    if (continues) line = trim_right(line.substr(0, line.size() - 1));

    if (continuing) {
      auto piece = trim(line);
      if (!piece.empty()) {
        if (!pending.empty()) pending.push_back(' ');
        pending += piece;
      }
    } else {
      pending = std::string(line);
    }
    continuing = continues;
    if (!continuing) {
      out.push_back(std::move(pending));
      pending.clear();
    }
  }
  if (continuing && !trim(pending).empty()) out.push_back(std::move(pending));
  return out;
}

}  // namespace

std::string_view to_string(DirectiveKind kind) noexcept {
  switch (kind) {
    case DirectiveKind::From: return "FROM";
    case DirectiveKind::User: return "USER";
    case DirectiveKind::Run: return "RUN";
    case DirectiveKind::Env: return "ENV";
    case DirectiveKind::Workdir: return "WORKDIR";
    case DirectiveKind::Copy: return "COPY";
  }
  return "?";
}

std::string Directive::canonical() const {
  std::string out(to_string(kind));
  out.push_back(' ');
  out += argument;
  return out;
}

std::string canonical_text(const std::vector<Directive>& directives) {
  std::string out;
  for (std::size_t i = 0; i < directives.size(); ++i) {
    if (i) out.push_back('\n');
    out += directives[i].canonical();
  }
  return out;
}

Recipe parse_recipe(std::string_view text) {
  Recipe recipe;
  for (const auto& line : logical_lines(text)) {
    auto body = trim(line);
    auto space = body.find_first_of(" \t");
    auto keyword = body.substr(0, space);
    auto kind = keyword_kind(keyword);
    if (!kind) {
      throw Error(Errc::UnknownDirective, std::string(keyword));
    }
    std::string_view argument =
        space == std::string_view::npos ? std::string_view{}
                                        : trim(body.substr(space));
    if (argument.empty()) {
      throw Error(Errc::MissingArgument,
                  std::string(to_string(*kind)) + " needs an argument");
    }
    recipe.directives.push_back({*kind, std::string(argument)});
  }

  if (recipe.directives.empty()) {
    throw Error(Errc::EmptyRecipe, "recipe contains no directives");
  }
  if (recipe.directives.front().kind != DirectiveKind::From) {
    throw Error(Errc::FromNotFirst,
                "first directive is " +
                    std::string(to_string(recipe.directives.front().kind)));
  }
  auto from_count = std::count_if(
      recipe.directives.begin(), recipe.directives.end(),
      [](const Directive& d) { return d.kind == DirectiveKind::From; });
  if (from_count > 1) {
    throw Error(Errc::MultipleFrom, "multi-stage recipes are not supported");
  }

  recipe.source_digest = sha256_hex(canonical_text(recipe.directives));
  return recipe;
}

}  // namespace crucible::image
