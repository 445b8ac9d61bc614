#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gsaudit/error.hpp"
#include "gsaudit/genre.hpp"
#include "gsaudit/hashing.hpp"
#include "gsaudit/text.hpp"

namespace gsaudit {

enum class Gender : std::uint8_t { Male, Female };

inline std::string_view to_string(Gender g) { return g == Gender::Male ? "Male" : "Female"; }

/// Accepts M, F, Male, Female (case-insensitive).
inline std::optional<Gender> parse_gender(std::string_view token) {
  const auto t = text::to_lower(text::trim(token));
  if (t == "m" || t == "male") return Gender::Male;
  if (t == "f" || t == "female") return Gender::Female;
  return std::nullopt;
}

struct UserRecord {
  std::int64_t user_id = 0;
  Gender gender = Gender::Male;
  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

struct MovieRecord {
  std::int64_t movie_id = 0;
  std::string title;  // UTF-8, never interpreted
  GenreSet genres;
  friend bool operator==(const MovieRecord&, const MovieRecord&) = default;
};

struct RatingTriple {
  std::int64_t user_id = 0;
  std::int64_t movie_id = 0;
  int rating = 0;
  std::int64_t timestamp = 0;
  friend bool operator==(const RatingTriple&, const RatingTriple&) = default;
};

/// What ingestion changed or discarded on the way in.
struct IngestReport {
  struct DroppedMovie {
    std::int64_t movie_id = 0;
    std::string reason;
  };
  struct AliasUse {
    std::string target;  // canonical name, or the remove/unresolved sentinel
    std::size_t count = 0;
  };
  std::vector<DroppedMovie> dropped_movies;
  std::size_t dropped_ratings = 0;     // ratings that pointed at dropped movies
  std::size_t duplicate_ratings = 0;   // earlier duplicates replaced by a later line
  std::size_t overrides_applied = 0;
  std::map<std::string, AliasUse> alias_applications;  // raw token -> use
  std::vector<std::string> warnings;
};

struct Provenance {
  std::string format;                              // "ml1m" | "interchange" | "memory"
  std::map<std::string, std::string> file_hashes;  // file name -> sha256
  IngestReport ingest;
};

/// Per-movie genre replacement lists, keyed by movie id. Tokens still go
/// through the alias map.
using MovieOverrides = std::map<std::int64_t, std::vector<std::string>>;

/// Reads `movie_id,Genre1|Genre2` lines ('#' comments allowed).
inline MovieOverrides load_overrides(const std::filesystem::path& path) {
  MovieOverrides out;
  const auto content = text::read_file(path);
  text::for_each_line(content, [&](std::string_view line, std::size_t line_no) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') return;
    const auto comma = line.find(',');
    const auto id = comma == std::string_view::npos
                        ? std::nullopt
                        : text::parse_number<std::int64_t>(line.substr(0, comma));
    if (!id) {
      throw IngestError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 'movie_id,Genre1|Genre2'");
    }
    std::vector<std::string> genres;
    for (auto tok : text::split(line.substr(comma + 1), "|")) {
      if (!text::trim(tok).empty()) genres.emplace_back(text::trim(tok));
    }
    out[*id] = std::move(genres);
  });
  return out;
}

namespace detail {

struct RawMovie {
  std::int64_t movie_id = 0;
  std::string title;
  std::vector<std::string> genre_tokens;
  std::size_t line = 0;
};

struct RawRating {
  RatingTriple triple;
  std::size_t line = 0;
};

}  // namespace detail

/// Immutable labeled rating corpus. Users are ordered by id, movies by id and
/// ratings by (user, movie); every rating resolves to a user and a movie.
class RatingCorpus {
 public:
  /// Validates and assembles a corpus from in-memory records. Duplicate
  /// (user, movie) pairs keep the last occurrence.
  static RatingCorpus from_records(std::vector<UserRecord> users, std::vector<MovieRecord> movies,
                                   std::vector<RatingTriple> ratings, GenreVocabulary vocabulary,
                                   Provenance provenance = {"memory", {}, {}}) {
    std::vector<detail::RawRating> raw;
    raw.reserve(ratings.size());
    for (std::size_t i = 0; i < ratings.size(); ++i) raw.push_back({ratings[i], i + 1});
    return assemble(std::move(users), std::move(movies), std::move(raw), {}, "ratings",
                    std::move(vocabulary), std::move(provenance));
  }

  const std::vector<UserRecord>& users() const { return users_; }
  const std::vector<MovieRecord>& movies() const { return movies_; }
  const std::vector<RatingTriple>& ratings() const { return ratings_; }
  const GenreVocabulary& vocabulary() const { return vocabulary_; }
  const Provenance& provenance() const { return provenance_; }

  std::optional<std::size_t> find_user(std::int64_t user_id) const {
    const auto it = user_index_.find(user_id);
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<std::size_t> find_movie(std::int64_t movie_id) const {
    const auto it = movie_index_.find(movie_id);
    if (it == movie_index_.end()) return std::nullopt;
    return it->second;
  }

  /// Ratings of the user at position `user_pos` (sorted by movie id).
  std::span<const RatingTriple> ratings_of(std::size_t user_pos) const {
    return std::span(ratings_).subspan(user_offsets_[user_pos],
                                       user_offsets_[user_pos + 1] - user_offsets_[user_pos]);
  }
  /// Movie positions parallel to ratings_of(user_pos).
  std::span<const std::uint32_t> rated_movies_of(std::size_t user_pos) const {
    return std::span(rating_movie_pos_)
        .subspan(user_offsets_[user_pos], user_offsets_[user_pos + 1] - user_offsets_[user_pos]);
  }

  std::size_t male_count() const {
    return static_cast<std::size_t>(std::count_if(
        users_.begin(), users_.end(), [](const UserRecord& u) { return u.gender == Gender::Male; }));
  }
  std::size_t female_count() const { return users_.size() - male_count(); }
  std::int64_t max_movie_id() const { return movies_.empty() ? 0 : movies_.back().movie_id; }

  /// Distinct canonical genres carried by at least one movie.
  std::size_t genre_count() const {
    GenreSet all;
    for (const auto& m : movies_) all = all | m.genres;
    return static_cast<std::size_t>(all.size());
  }

  // Used by the file loaders; not part of the public surface.
  static RatingCorpus assemble(std::vector<UserRecord> users, std::vector<MovieRecord> movies,
                               std::vector<detail::RawRating> ratings,
                               const std::set<std::int64_t>& dropped_movies,
                               const std::string& ratings_label, GenreVocabulary vocabulary,
                               Provenance provenance) {
    RatingCorpus c;
    c.vocabulary_ = std::move(vocabulary);
    c.provenance_ = std::move(provenance);

    std::sort(users.begin(), users.end(),
              [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
    for (std::size_t i = 1; i < users.size(); ++i) {
      if (users[i].user_id == users[i - 1].user_id) {
        throw IngestError("duplicate user id " + std::to_string(users[i].user_id));
      }
    }
    std::sort(movies.begin(), movies.end(),
              [](const auto& a, const auto& b) { return a.movie_id < b.movie_id; });
    for (std::size_t i = 1; i < movies.size(); ++i) {
      if (movies[i].movie_id == movies[i - 1].movie_id) {
        throw IngestError("duplicate movie id " + std::to_string(movies[i].movie_id));
      }
    }
    const auto genre_limit = c.vocabulary_.size() >= 64
                                 ? ~std::uint64_t{0}
                                 : (std::uint64_t{1} << c.vocabulary_.size()) - 1;
    for (const auto& m : movies) {
      if ((m.genres.bits() & ~genre_limit) != 0) {
        throw IngestError("movie " + std::to_string(m.movie_id) + " has genres outside the vocabulary");
      }
    }
    c.users_ = std::move(users);
    c.movies_ = std::move(movies);
    c.user_index_.reserve(c.users_.size());
    for (std::size_t i = 0; i < c.users_.size(); ++i) c.user_index_.emplace(c.users_[i].user_id, i);
    c.movie_index_.reserve(c.movies_.size());
    for (std::size_t i = 0; i < c.movies_.size(); ++i) {
      c.movie_index_.emplace(c.movies_[i].movie_id, i);
    }

    struct Keyed {
      std::uint32_t user_pos;
      std::uint32_t movie_pos;
      std::size_t order;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(ratings.size());
    for (std::size_t i = 0; i < ratings.size(); ++i) {
      const auto& r = ratings[i];
      const auto where = ratings_label + ":" + std::to_string(r.line);
      if (r.triple.rating < 1 || r.triple.rating > 5) {
        throw IngestError(where + ": rating " + std::to_string(r.triple.rating) +
                          " outside 1..5");
      }
      const auto u = c.user_index_.find(r.triple.user_id);
      if (u == c.user_index_.end()) {
        throw IngestError(where + ": unknown user id " + std::to_string(r.triple.user_id));
      }
      const auto m = c.movie_index_.find(r.triple.movie_id);
      if (m == c.movie_index_.end()) {
        if (dropped_movies.contains(r.triple.movie_id)) {
          ++c.provenance_.ingest.dropped_ratings;
          continue;
        }
        throw IngestError(where + ": unknown movie id " + std::to_string(r.triple.movie_id));
      }
      keyed.push_back({static_cast<std::uint32_t>(u->second),
                       static_cast<std::uint32_t>(m->second), i});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
      if (a.user_pos != b.user_pos) return a.user_pos < b.user_pos;
      if (a.movie_pos != b.movie_pos) return a.movie_pos < b.movie_pos;
      return a.order < b.order;
    });

    c.ratings_.reserve(keyed.size());
    c.rating_movie_pos_.reserve(keyed.size());
    c.user_offsets_.assign(c.users_.size() + 1, 0);
    for (std::size_t i = 0; i < keyed.size(); ++i) {
      const bool superseded = i + 1 < keyed.size() && keyed[i + 1].user_pos == keyed[i].user_pos &&
                              keyed[i + 1].movie_pos == keyed[i].movie_pos;
      if (superseded) {
        ++c.provenance_.ingest.duplicate_ratings;
        continue;
      }
      c.ratings_.push_back(ratings[keyed[i].order].triple);
      c.rating_movie_pos_.push_back(keyed[i].movie_pos);
      ++c.user_offsets_[keyed[i].user_pos + 1];
    }
    for (std::size_t u = 0; u < c.users_.size(); ++u) c.user_offsets_[u + 1] += c.user_offsets_[u];
    if (c.provenance_.ingest.duplicate_ratings > 0) {
      c.provenance_.ingest.warnings.push_back(
          std::to_string(c.provenance_.ingest.duplicate_ratings) +
          " duplicate (user, movie) ratings; kept the last occurrence");
    }
    return c;
  }

 private:
  RatingCorpus() = default;

  std::vector<UserRecord> users_;
  std::vector<MovieRecord> movies_;
  std::vector<RatingTriple> ratings_;
  std::vector<std::uint32_t> rating_movie_pos_;
  std::vector<std::size_t> user_offsets_;
  std::unordered_map<std::int64_t, std::size_t> user_index_;
  std::unordered_map<std::int64_t, std::size_t> movie_index_;
  GenreVocabulary vocabulary_;
  Provenance provenance_;
};

// ---------------------------------------------------------------------------
// Movie columns: MovieLens numbers movies densely from 1, so its columns are
// indexed by movie id (ids with no record stay empty). Sparse id spaces such
// as Yahoo!Movie's get one column per movie record.

struct MovieColumnLayout {
  bool by_id = false;
  std::size_t column_count = 0;
  std::vector<std::uint32_t> column_of_movie;  // movie position -> column
  std::vector<std::int64_t> movie_id_of_column;  // column -> movie id (0 = no record)
};

inline MovieColumnLayout movie_column_layout(const RatingCorpus& corpus) {
  MovieColumnLayout layout;
  const auto& movies = corpus.movies();
  const auto n = static_cast<std::int64_t>(movies.size());
  const auto max_id = corpus.max_movie_id();
  layout.by_id = n > 0 && movies.front().movie_id >= 1 && max_id <= n + n / 20;
  layout.column_count = layout.by_id ? static_cast<std::size_t>(max_id) : movies.size();
  layout.movie_id_of_column.assign(layout.column_count, 0);
  layout.column_of_movie.resize(movies.size());
  for (std::size_t i = 0; i < movies.size(); ++i) {
    const auto col = layout.by_id ? static_cast<std::size_t>(movies[i].movie_id - 1) : i;
    layout.column_of_movie[i] = static_cast<std::uint32_t>(col);
    layout.movie_id_of_column[col] = movies[i].movie_id;
  }
  return layout;
}

struct CorpusStats {
  std::size_t users = 0;
  std::size_t male = 0;
  std::size_t female = 0;
  double male_percent = 0;
  double female_percent = 0;
  std::size_t movie_records = 0;
  std::int64_t max_movie_id = 0;
  std::size_t movie_columns = 0;
  std::size_t ratings = 0;
  std::size_t genres = 0;
  double density = 0;          // ratings / (users * movie_columns), as a fraction
  double density_percent = 0;  // rounded to 2 decimal places
};

inline double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

inline CorpusStats corpus_stats(const RatingCorpus& corpus) {
  CorpusStats s;
  s.users = corpus.users().size();
  s.male = corpus.male_count();
  s.female = corpus.female_count();
  if (s.users > 0) {
    s.male_percent = 100.0 * static_cast<double>(s.male) / static_cast<double>(s.users);
    s.female_percent = 100.0 * static_cast<double>(s.female) / static_cast<double>(s.users);
  }
  s.movie_records = corpus.movies().size();
  s.max_movie_id = corpus.max_movie_id();
  s.movie_columns = movie_column_layout(corpus).column_count;
  s.ratings = corpus.ratings().size();
  s.genres = corpus.genre_count();
  if (s.users > 0 && s.movie_columns > 0) {
    s.density = static_cast<double>(s.ratings) /
                (static_cast<double>(s.users) * static_cast<double>(s.movie_columns));
  }
  s.density_percent = round_to(100.0 * s.density, 2);
  return s;
}

namespace detail {

/// Applies overrides and the alias map. Returns kept movies; fills `dropped`.
inline std::vector<MovieRecord> normalise_movies(std::vector<RawMovie> raw,
                                                 const GenreVocabulary& vocab,
                                                 const MovieOverrides& overrides,
                                                 const std::string& movies_label,
                                                 IngestReport& report,
                                                 std::set<std::int64_t>& dropped) {
  std::vector<MovieRecord> kept;
  kept.reserve(raw.size());
  std::set<std::string> unknown;
  for (auto& m : raw) {
    const std::vector<std::string>* tokens = &m.genre_tokens;
    if (auto it = overrides.find(m.movie_id); it != overrides.end()) {
      tokens = &it->second;
      ++report.overrides_applied;
    }
    GenreSet genres;
    bool removed_any = false;
    std::optional<std::string> unresolved;
    for (const auto& token : *tokens) {
      const auto t = text::trim(token);
      if (t.empty()) continue;
      const auto target = vocab.resolve(t);
      if (!target) {
        unknown.emplace(t);
        continue;
      }
      const bool identity = target->kind == AliasTarget::Kind::Genre &&
                            text::to_lower(vocab.name(target->genre)) == text::to_lower(t);
      if (!identity) {
        auto& use = report.alias_applications[std::string(t)];
        use.target = target->kind == AliasTarget::Kind::Genre ? vocab.name(target->genre)
                     : target->kind == AliasTarget::Kind::Remove
                         ? std::string(kRemoveSentinel)
                         : std::string(kUnresolvedSentinel);
        ++use.count;
      }
      switch (target->kind) {
        case AliasTarget::Kind::Genre: genres.insert(target->genre); break;
        case AliasTarget::Kind::Remove: removed_any = true; break;
        case AliasTarget::Kind::Unresolved: unresolved = std::string(t); break;
      }
    }
    std::optional<std::string> reason;
    if (unresolved) {
      reason = "unresolved genre '" + *unresolved + "' and no override";
    } else if (genres.empty()) {
      reason = removed_any ? "all genres removed" : "no genre and no override";
    }
    if (reason) {
      report.dropped_movies.push_back({m.movie_id, *reason});
      dropped.insert(m.movie_id);
      continue;
    }
    kept.push_back({m.movie_id, std::move(m.title), genres});
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + ("'" + u + "'");
    throw IngestError(movies_label + ": unknown genre token(s) with no alias: " + list);
  }
  return kept;
}

inline std::filesystem::path require_file(const std::filesystem::path& root, const char* name) {
  auto p = root / name;
  if (!std::filesystem::is_regular_file(p)) {
    throw IngestError("missing file " + std::string(name) + " (looked for " + p.string() + ")");
  }
  return p;
}

[[noreturn]] inline void malformed(const char* file, std::size_t line, const std::string& what) {
  throw IngestError(std::string(file) + ":" + std::to_string(line) + ": " + what);
}

}  // namespace detail

/// Loads a MovieLens-1M directory (users.dat, movies.dat, ratings.dat).
inline RatingCorpus load_ml1m(const std::filesystem::path& root,
                              const GenreVocabulary& vocabulary = ml1m_alias_map(),
                              const MovieOverrides& overrides = {}) {
  using detail::malformed;
  const auto users_path = detail::require_file(root, "users.dat");
  const auto movies_path = detail::require_file(root, "movies.dat");
  const auto ratings_path = detail::require_file(root, "ratings.dat");

  Provenance prov;
  prov.format = "ml1m";

  std::vector<UserRecord> users;
  {
    const auto content = text::read_file(users_path);
    text::for_each_line(content, [&](std::string_view line, std::size_t n) {
      if (text::trim(line).empty()) return;
      const auto f = text::split(line, "::");
      if (f.size() != 5) malformed("users.dat", n, "expected 5 '::'-separated fields");
      const auto id = text::parse_number<std::int64_t>(f[0]);
      if (!id) malformed("users.dat", n, "bad user id");
      const auto t = text::trim(f[1]);
      if (t != "M" && t != "F") malformed("users.dat", n, "gender must be M or F");
      users.push_back({*id, t == "M" ? Gender::Male : Gender::Female});
    });
    if (users.empty()) throw IngestError("users.dat: no user records");
  }

  std::vector<detail::RawMovie> raw_movies;
  {
    const auto content = text::read_file(movies_path);
    text::for_each_line(content, [&](std::string_view line, std::size_t n) {
      if (text::trim(line).empty()) return;
      const auto first = line.find("::");
      const auto last = line.rfind("::");
      if (first == std::string_view::npos || first == last) {
        malformed("movies.dat", n, "expected MovieID::Title::Genres");
      }
      const auto id = text::parse_number<std::int64_t>(line.substr(0, first));
      if (!id) malformed("movies.dat", n, "bad movie id");
      detail::RawMovie m;
      m.movie_id = *id;
      m.title = text::latin1_to_utf8(line.substr(first + 2, last - first - 2));
      for (auto tok : text::split(line.substr(last + 2), "|")) {
        if (!text::trim(tok).empty()) m.genre_tokens.emplace_back(text::trim(tok));
      }
      m.line = n;
      raw_movies.push_back(std::move(m));
    });
    if (raw_movies.empty()) throw IngestError("movies.dat: no movie records");
  }

  std::vector<detail::RawRating> ratings;
  {
    const auto content = text::read_file(ratings_path);
    ratings.reserve(content.size() / 20);
    text::for_each_line(content, [&](std::string_view line, std::size_t n) {
      if (text::trim(line).empty()) return;
      const auto f = text::split(line, "::");
      if (f.size() != 4) malformed("ratings.dat", n, "expected 4 '::'-separated fields");
      const auto user = text::parse_number<std::int64_t>(f[0]);
      const auto movie = text::parse_number<std::int64_t>(f[1]);
      const auto rating = text::parse_number<int>(f[2]);
      const auto ts = text::parse_number<std::int64_t>(f[3]);
      if (!user || !movie || !rating || !ts) malformed("ratings.dat", n, "non-numeric field");
      ratings.push_back({{*user, *movie, *rating, *ts}, n});
    });
    if (ratings.empty()) throw IngestError("ratings.dat: no rating records");
  }

  std::set<std::int64_t> dropped;
  auto movies = detail::normalise_movies(std::move(raw_movies), vocabulary, overrides,
                                         "movies.dat", prov.ingest, dropped);
  prov.file_hashes["users.dat"] = sha256_file(users_path);
  prov.file_hashes["movies.dat"] = sha256_file(movies_path);
  prov.file_hashes["ratings.dat"] = sha256_file(ratings_path);
  return RatingCorpus::assemble(std::move(users), std::move(movies), std::move(ratings), dropped,
                                "ratings.dat", vocabulary, std::move(prov));
}

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path,
                                                      const char* name,
                                                      const std::vector<std::string>& header) {
  const auto content = text::read_file(path);
  std::vector<std::vector<std::string>> rows;
  bool saw_header = false;
  text::for_each_line(content, [&](std::string_view line, std::size_t n) {
    if (!saw_header) {
      if (n == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
      auto fields = text::parse_csv_record(line);
      std::vector<std::string> got;
      if (fields) {
        for (const auto& f : *fields) got.push_back(text::to_lower(text::trim(f)));
      }
      if (got != header) {
        std::string want;
        for (const auto& h : header) want += (want.empty() ? "" : ",") + h;
        malformed(name, n, "header must be '" + want + "'");
      }
      saw_header = true;
      return;
    }
    if (text::trim(line).empty()) return;
    auto fields = text::parse_csv_record(line);
    if (!fields) malformed(name, n, "unterminated quoted field");
    if (fields->size() != header.size()) {
      malformed(name, n, "expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields->size()));
    }
    rows.push_back(std::move(*fields));
  });
  if (!saw_header) malformed(name, 1, "missing header row");
  return rows;
}

}  // namespace detail

/// Loads the neutral CSV layout: users.csv, movies.csv, ratings.csv.
inline RatingCorpus load_interchange(const std::filesystem::path& dir,
                                     const GenreVocabulary& vocabulary = canonical_vocabulary(),
                                     const MovieOverrides& overrides = {}) {
  using detail::malformed;
  const auto users_path = detail::require_file(dir, "users.csv");
  const auto movies_path = detail::require_file(dir, "movies.csv");
  const auto ratings_path = detail::require_file(dir, "ratings.csv");

  Provenance prov;
  prov.format = "interchange";

  std::vector<UserRecord> users;
  {
    const auto rows = detail::read_csv(users_path, "users.csv", {"user_id", "gender"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto id = text::parse_number<std::int64_t>(rows[i][0]);
      if (!id) malformed("users.csv", i + 2, "bad user id");
      const auto g = parse_gender(rows[i][1]);
      if (!g) malformed("users.csv", i + 2, "gender '" + rows[i][1] + "' not in {M,F,Male,Female}");
      users.push_back({*id, *g});
    }
    if (users.empty()) throw IngestError("users.csv: no user records");
  }

  std::vector<detail::RawMovie> raw_movies;
  {
    const auto rows =
        detail::read_csv(movies_path, "movies.csv", {"movie_id", "title", "genres"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto id = text::parse_number<std::int64_t>(rows[i][0]);
      if (!id) malformed("movies.csv", i + 2, "bad movie id");
      detail::RawMovie m;
      m.movie_id = *id;
      m.title = rows[i][1];
      for (auto tok : text::split(rows[i][2], "|")) {
        if (!text::trim(tok).empty()) m.genre_tokens.emplace_back(text::trim(tok));
      }
      m.line = i + 2;
      raw_movies.push_back(std::move(m));
    }
    if (raw_movies.empty()) throw IngestError("movies.csv: no movie records");
  }

  std::vector<detail::RawRating> ratings;
  {
    const auto rows = detail::read_csv(ratings_path, "ratings.csv",
                                       {"user_id", "movie_id", "rating", "timestamp"});
    ratings.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto user = text::parse_number<std::int64_t>(rows[i][0]);
      const auto movie = text::parse_number<std::int64_t>(rows[i][1]);
      const auto rating = text::parse_number<int>(rows[i][2]);
      const auto ts = text::parse_number<std::int64_t>(rows[i][3]);
      if (!user || !movie || !rating || !ts) malformed("ratings.csv", i + 2, "non-numeric field");
      ratings.push_back({{*user, *movie, *rating, *ts}, i + 2});
    }
    if (ratings.empty()) throw IngestError("ratings.csv: no rating records");
  }

  std::set<std::int64_t> dropped;
  auto movies = detail::normalise_movies(std::move(raw_movies), vocabulary, overrides,
                                         "movies.csv", prov.ingest, dropped);
  prov.file_hashes["users.csv"] = sha256_file(users_path);
  prov.file_hashes["movies.csv"] = sha256_file(movies_path);
  prov.file_hashes["ratings.csv"] = sha256_file(ratings_path);
  return RatingCorpus::assemble(std::move(users), std::move(movies), std::move(ratings), dropped,
                                "ratings.csv", vocabulary, std::move(prov));
}

/// Writes the corpus in the interchange layout (UTF-8, header rows).
inline void write_interchange(const RatingCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string users = "user_id,gender\n";
  for (const auto& u : corpus.users()) {
    users += std::to_string(u.user_id) + (u.gender == Gender::Male ? ",M\n" : ",F\n");
  }
  std::string movies = "movie_id,title,genres\n";
  for (const auto& m : corpus.movies()) {
    std::string genres;
    for (const auto& g : corpus.vocabulary().names(m.genres)) {
      genres += (genres.empty() ? "" : "|") + g;
    }
    movies += text::csv_row(std::vector<std::string>{std::to_string(m.movie_id), m.title, genres});
  }
  std::string ratings = "user_id,movie_id,rating,timestamp\n";
  ratings.reserve(corpus.ratings().size() * 24);
  for (const auto& r : corpus.ratings()) {
    ratings += std::to_string(r.user_id);
    ratings += ',';
    ratings += std::to_string(r.movie_id);
    ratings += ',';
    ratings += std::to_string(r.rating);
    ratings += ',';
    ratings += std::to_string(r.timestamp);
    ratings += '\n';
  }
  text::write_file_atomic(dir / "users.csv", users);
  text::write_file_atomic(dir / "movies.csv", movies);
  text::write_file_atomic(dir / "ratings.csv", ratings);
}

}  // namespace gsaudit
