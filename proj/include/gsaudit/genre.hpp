#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gsaudit/error.hpp"
#include "gsaudit/text.hpp"

namespace gsaudit {

/// Canonical genre, identified by its position in a GenreVocabulary.
struct GenreId {
  std::uint8_t index = 0;
  friend auto operator<=>(const GenreId&, const GenreId&) = default;
};

/// Set of genres as a bit mask over vocabulary positions (at most 64 genres).
class GenreSet {
 public:
  constexpr GenreSet() = default;
  constexpr explicit GenreSet(std::uint64_t bits) : bits_(bits) {}

  void insert(GenreId g) { bits_ |= std::uint64_t{1} << g.index; }
  void erase(GenreId g) { bits_ &= ~(std::uint64_t{1} << g.index); }
  bool contains(GenreId g) const { return (bits_ >> g.index) & 1U; }
  bool empty() const { return bits_ == 0; }
  int size() const { return std::popcount(bits_); }
  std::uint64_t bits() const { return bits_; }

  GenreSet operator&(GenreSet o) const { return GenreSet(bits_ & o.bits_); }
  GenreSet operator|(GenreSet o) const { return GenreSet(bits_ | o.bits_); }
  friend bool operator==(GenreSet, GenreSet) = default;

 private:
  std::uint64_t bits_ = 0;
};

/// Where a raw genre token ends up after normalisation.
struct AliasTarget {
  enum class Kind { Genre, Remove, Unresolved };
  Kind kind = Kind::Genre;
  GenreId genre{};

  static AliasTarget to(GenreId g) { return {Kind::Genre, g}; }
  static AliasTarget remove() { return {Kind::Remove, {}}; }
  static AliasTarget unresolved() { return {Kind::Unresolved, {}}; }
  friend bool operator==(const AliasTarget&, const AliasTarget&) = default;
};

inline constexpr std::string_view kRemoveSentinel = "__REMOVE__";
inline constexpr std::string_view kUnresolvedSentinel = "__UNRESOLVED__";

/// Ordered canonical genres plus a case-insensitive alias map from raw
/// dataset tokens. Canonical names always resolve to themselves, and alias
/// targets are canonical, so resolution is idempotent and acyclic.
class GenreVocabulary {
 public:
  GenreVocabulary() = default;

  explicit GenreVocabulary(const std::vector<std::string>& genres) {
    if (genres.size() > 64) throw ConfigError("genre vocabulary is limited to 64 genres");
    for (const auto& g : genres) {
      const auto key = text::to_lower(text::trim(g));
      if (key.empty()) throw ConfigError("empty genre name in vocabulary");
      if (canonical_index_.contains(key)) throw ConfigError("duplicate genre '" + g + "'");
      canonical_index_.emplace(key, static_cast<std::uint8_t>(genres_.size()));
      genres_.emplace_back(text::trim(g));
    }
  }

  const std::vector<std::string>& genres() const { return genres_; }
  std::size_t size() const { return genres_.size(); }
  const std::string& name(GenreId g) const { return genres_.at(g.index); }

  /// Raw (lower-cased) token -> target, excluding the implicit identities.
  const std::map<std::string, AliasTarget>& aliases() const { return aliases_; }

  std::optional<GenreId> find(std::string_view name) const {
    const auto it = canonical_index_.find(text::to_lower(text::trim(name)));
    if (it == canonical_index_.end()) return std::nullopt;
    return GenreId{it->second};
  }

  GenreId require(std::string_view name) const {
    if (auto g = find(name)) return *g;
    throw ConfigError("genre '" + std::string(name) + "' is not in the vocabulary");
  }

  void add_alias(std::string_view raw, AliasTarget target) {
    const auto key = text::to_lower(text::trim(raw));
    if (key.empty()) throw ConfigError("empty alias key");
    if (auto self = canonical_index_.find(key); self != canonical_index_.end()) {
      if (target.kind != AliasTarget::Kind::Genre || target.genre.index != self->second) {
        throw ConfigError("canonical genre '" + std::string(raw) + "' cannot be re-aliased");
      }
      return;
    }
    if (target.kind == AliasTarget::Kind::Genre && target.genre.index >= genres_.size()) {
      throw ConfigError("alias target out of range for '" + std::string(raw) + "'");
    }
    aliases_[key] = target;
  }

  void add_alias(std::string_view raw, std::string_view canonical) {
    const auto t = text::trim(canonical);
    if (t == kRemoveSentinel) {
      add_alias(raw, AliasTarget::remove());
    } else if (t == kUnresolvedSentinel) {
      add_alias(raw, AliasTarget::unresolved());
    } else {
      add_alias(raw, AliasTarget::to(require(t)));
    }
  }

  /// nullopt for a token that is neither canonical nor aliased.
  std::optional<AliasTarget> resolve(std::string_view raw) const {
    const auto key = text::to_lower(text::trim(raw));
    if (auto it = canonical_index_.find(key); it != canonical_index_.end()) {
      return AliasTarget::to(GenreId{it->second});
    }
    if (auto it = aliases_.find(key); it != aliases_.end()) return it->second;
    return std::nullopt;
  }

  std::vector<std::string> names(GenreSet set) const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < genres_.size(); ++i) {
      if (set.contains(GenreId{static_cast<std::uint8_t>(i)})) out.push_back(genres_[i]);
    }
    return out;
  }

  /// Reads `raw,canonical` lines ('#' comments and blank lines ignored) on
  /// top of this vocabulary.
  void load_alias_file(const std::filesystem::path& path) {
    const auto content = text::read_file(path);
    text::for_each_line(content, [&](std::string_view line, std::size_t line_no) {
      line = text::trim(line);
      if (line.empty() || line.front() == '#') return;
      const auto comma = line.rfind(',');
      if (comma == std::string_view::npos) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": expected 'raw,canonical'");
      }
      try {
        add_alias(line.substr(0, comma), line.substr(comma + 1));
      } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
    });
  }

 private:
  std::vector<std::string> genres_;
  std::map<std::string, std::uint8_t> canonical_index_;
  std::map<std::string, AliasTarget> aliases_;
};

/// The 21-genre IMDb-derived vocabulary used throughout the toolkit.
inline GenreVocabulary canonical_vocabulary() {
  return GenreVocabulary({"Action", "Adventure", "Animation", "Biography", "Comedy", "Crime",
                          "Documentary", "Drama", "Family", "Fantasy", "Film-Noir", "History",
                          "Horror", "Musical", "Mystery", "Romance", "Sci-Fi", "Sports",
                          "Thriller", "War", "Western"});
}

/// MovieLens-1M tokens: "Children's" is folded into Family, the rest are
/// already canonical.
inline GenreVocabulary ml1m_alias_map() {
  auto vocab = canonical_vocabulary();
  vocab.add_alias("Children's", "Family");
  return vocab;
}

/// Yahoo!Movie genre clean-up table. Miscellaneous/Features carry no usable
/// genre and need a per-movie override.
inline GenreVocabulary yahoo_alias_map() {
  auto vocab = canonical_vocabulary();
  vocab.add_alias("Music", "Musical");
  vocab.add_alias("Performing Art", "Musical");
  vocab.add_alias("Suspense", "Thriller");
  vocab.add_alias("Kids", "Family");
  vocab.add_alias("Gangster", "Crime");
  vocab.add_alias("Adult Audience", AliasTarget::remove());
  vocab.add_alias("Delete", AliasTarget::remove());
  vocab.add_alias("Miscellaneous", AliasTarget::unresolved());
  vocab.add_alias("Features", AliasTarget::unresolved());
  return vocab;
}

}  // namespace gsaudit
