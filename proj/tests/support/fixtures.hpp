#pragma once

// Shared helpers for the test suites: scratch directories, small in-memory
// corpora and a generator for MovieLens-1M-format directories.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

#include "gsaudit/gsaudit.hpp"

namespace gsaudit::testing {

/// Directory removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("gsaudit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

inline GenreSet genres_of(const GenreVocabulary& vocab, std::initializer_list<const char*> names) {
  GenreSet s;
  for (const auto* n : names) s.insert(vocab.require(n));
  return s;
}

/// Tokens as they appear in raw movies.dat.
inline const std::vector<std::string>& ml1m_genre_tokens() {
  static const std::vector<std::string> tokens = {
      "Action",  "Adventure", "Animation", "Children's", "Comedy",  "Crime",
      "Documentary", "Drama", "Fantasy",   "Film-Noir",  "Horror",  "Musical",
      "Mystery", "Romance",   "Sci-Fi",    "Thriller",   "War",     "Western"};
  return tokens;
}

struct SyntheticMl1mSpec {
  std::size_t users = 300;
  std::size_t male_share_percent = 72;
  std::size_t movies = 200;
  std::int64_t movie_id_gap_every = 30;  // skip one id after every N movies
  std::size_t min_ratings = 20;
  std::size_t max_ratings = 60;
  double signal = 0.8;  // probability a rating follows the user's gender-typical genres
  std::uint64_t seed = 1;
};

/// Counts the generator wrote, tallied independently of the loader.
struct SyntheticMl1mTruth {
  std::size_t users = 0;
  std::size_t male = 0;
  std::size_t female = 0;
  std::size_t movie_records = 0;
  std::int64_t max_movie_id = 0;
  std::size_t ratings = 0;
  std::size_t distinct_tokens = 0;
  std::map<std::int64_t, std::vector<std::string>> movie_tokens;
};

/// Writes users.dat, movies.dat (Latin-1 titles) and ratings.dat into `dir`.
/// Men draw most of their ratings from movies tagged with stereotypically
/// male genres, women from the female ones, so the gender signal is planted.
inline SyntheticMl1mTruth write_synthetic_ml1m(const std::filesystem::path& dir,
                                               const SyntheticMl1mSpec& spec = {}) {
  Rng rng(spec.seed);
  SyntheticMl1mTruth truth;
  const auto& tokens = ml1m_genre_tokens();
  const std::vector<std::string> male_tokens = {"Action", "Adventure", "Comedy", "Crime", "Horror", "War"};
  const std::vector<std::string> female_tokens = {"Animation", "Children's", "Drama", "Romance"};
  auto has_any = [](const std::vector<std::string>& g, const std::vector<std::string>& set) {
    for (const auto& t : g) {
      for (const auto& s : set) {
        if (t == s) return true;
      }
    }
    return false;
  };

  std::string movies;
  std::vector<std::int64_t> ids;
  std::vector<std::int64_t> male_pool, female_pool;
  std::int64_t id = 0;
  std::map<std::string, int> seen_tokens;
  for (std::size_t m = 0; m < spec.movies; ++m) {
    ++id;
    if (spec.movie_id_gap_every > 0 && m > 0 && m % static_cast<std::size_t>(spec.movie_id_gap_every) == 0) ++id;
    std::vector<std::string> g;
    const auto count = 1 + rng.below(3);
    while (g.size() < count) {
      const auto& t = tokens[rng.below(tokens.size())];
      if (std::find(g.begin(), g.end(), t) == g.end()) g.push_back(t);
    }
    if (m < tokens.size()) g.front() = tokens[m];  // every token appears at least once
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    for (const auto& t : g) seen_tokens[t]++;
    std::string joined;
    for (const auto& t : g) joined += (joined.empty() ? "" : "|") + t;
    // "\xE9" is e-acute in Latin-1
    movies += std::to_string(id) + "::Caf\xE9 Movie " + std::to_string(id) + ", The (19" +
              std::to_string(50 + m % 50) + ")::" + joined + "\n";
    ids.push_back(id);
    truth.movie_tokens[id] = g;
    if (has_any(g, male_tokens)) male_pool.push_back(id);
    if (has_any(g, female_tokens)) female_pool.push_back(id);
  }
  truth.movie_records = spec.movies;
  truth.max_movie_id = id;
  truth.distinct_tokens = seen_tokens.size();

  std::string users;
  std::string ratings;
  for (std::size_t u = 1; u <= spec.users; ++u) {
    const bool male = rng.below(100) < spec.male_share_percent;
    users += std::to_string(u) + "::" + (male ? "M" : "F") + "::25::4::02139\n";
    ++(male ? truth.male : truth.female);
    const auto n = spec.min_ratings + rng.below(spec.max_ratings - spec.min_ratings + 1);
    std::vector<std::int64_t> chosen;
    for (std::size_t tries = 0; chosen.size() < n && tries < 20 * n; ++tries) {
      const auto& pool = rng.bernoulli(spec.signal) ? (male ? male_pool : female_pool) : ids;
      const auto movie = pool[rng.below(pool.size())];
      if (std::find(chosen.begin(), chosen.end(), movie) == chosen.end()) chosen.push_back(movie);
    }
    for (const auto movie : chosen) {
      ratings += std::to_string(u) + "::" + std::to_string(movie) + "::" +
                 std::to_string(1 + rng.below(5)) + "::" + std::to_string(978300000 + rng.below(100000)) + "\n";
      ++truth.ratings;
    }
  }
  truth.users = spec.users;
  write_bytes(dir / "users.dat", users);
  write_bytes(dir / "movies.dat", movies);
  write_bytes(dir / "ratings.dat", ratings);
  return truth;
}

/// Three users, two movies, tiny and hand-checkable.
inline RatingCorpus tiny_corpus() {
  auto vocab = canonical_vocabulary();
  std::vector<UserRecord> users = {{1, Gender::Male}, {2, Gender::Female}, {3, Gender::Male}};
  std::vector<MovieRecord> movies = {{10, "A", genres_of(vocab, {"Action", "War", "Drama"})},
                                     {20, "B", genres_of(vocab, {"Romance"})}};
  std::vector<RatingTriple> ratings = {{1, 10, 4, 0}, {2, 20, 5, 0}, {3, 10, 3, 0}};
  return RatingCorpus::from_records(users, movies, ratings, vocab);
}

}  // namespace gsaudit::testing
