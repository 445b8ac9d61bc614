#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsaudit/corpus.hpp"
#include "gsaudit/error.hpp"
#include "gsaudit/genre.hpp"
#include "gsaudit/text.hpp"

namespace gsaudit {

/// Genre sets presumed preferred by men and by women.
struct StereotypeModel {
  std::vector<std::string> male_genres;
  std::vector<std::string> female_genres;
  friend bool operator==(const StereotypeModel&, const StereotypeModel&) = default;
};

/// Male set: genres with a significant positive association with male viewers
/// in the survey regression; female set: significant negative association.
inline StereotypeModel default_model() {
  return {{"Action", "Adventure", "Comedy", "Crime", "Horror", "War"},
          {"Animation", "Drama", "Family", "Romance"}};
}

/// Resolved masks of a model against a vocabulary.
struct StereotypeMasks {
  GenreSet male;
  GenreSet female;
};

/// Checks the model invariants (non-empty, disjoint, inside the vocabulary)
/// and resolves the names.
inline StereotypeMasks resolve(const StereotypeModel& model, const GenreVocabulary& vocab) {
  if (model.male_genres.empty() || model.female_genres.empty()) {
    throw ConfigError("stereotype model needs non-empty male and female genre sets");
  }
  StereotypeMasks masks;
  for (const auto& g : model.male_genres) masks.male.insert(vocab.require(g));
  for (const auto& g : model.female_genres) masks.female.insert(vocab.require(g));
  if (!(masks.male & masks.female).empty()) {
    std::string overlap;
    for (const auto& n : vocab.names(masks.male & masks.female)) {
      overlap += (overlap.empty() ? "" : ", ") + n;
    }
    throw ConfigError("male and female stereotype sets overlap: " + overlap);
  }
  return masks;
}

inline nlohmann::json to_json(const StereotypeModel& m) {
  return {{"male_genres", m.male_genres}, {"female_genres", m.female_genres}};
}

/// Reads {"male_genres": [...], "female_genres": [...]}.
inline StereotypeModel load_stereotype_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("stereotype model " + path.string() + ": " + e.what());
  } catch (const IngestError& e) {
    throw ConfigError(e.what());
  }
  StereotypeModel m;
  try {
    m.male_genres = j.at("male_genres").get<std::vector<std::string>>();
    m.female_genres = j.at("female_genres").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("stereotype model " + path.string() + ": " + e.what());
  }
  return m;
}

/// How per-item genre overlaps are aggregated into d_male / d_female.
enum class AggregationMode {
  Cardinality,  // sum of |genres(item) ∩ set|
  ItemCount,    // number of items whose genres meet the set
};

inline std::string_view to_string(AggregationMode m) {
  return m == AggregationMode::Cardinality ? "cardinality" : "item-count";
}

inline AggregationMode parse_aggregation_mode(std::string_view s) {
  if (s == "cardinality") return AggregationMode::Cardinality;
  if (s == "item-count") return AggregationMode::ItemCount;
  throw ConfigError("unknown aggregation mode '" + std::string(s) + "'");
}

struct AlignmentDegrees {
  std::int64_t user_id = 0;
  std::int64_t d_male = 0;
  std::int64_t d_female = 0;
  friend bool operator==(const AlignmentDegrees&, const AlignmentDegrees&) = default;
};

namespace detail {
inline AlignmentDegrees degrees_at(const RatingCorpus& corpus, const StereotypeMasks& masks,
                                   std::size_t user_pos, AggregationMode mode) {
  AlignmentDegrees d{corpus.users()[user_pos].user_id, 0, 0};
  const auto& movies = corpus.movies();
  for (const auto movie_pos : corpus.rated_movies_of(user_pos)) {
    const auto genres = movies[movie_pos].genres;
    const int male = (genres & masks.male).size();
    const int female = (genres & masks.female).size();
    if (mode == AggregationMode::Cardinality) {
      d.d_male += male;
      d.d_female += female;
    } else {
      d.d_male += male > 0 ? 1 : 0;
      d.d_female += female > 0 ? 1 : 0;
    }
  }
  return d;
}
}  // namespace detail

/// Degrees over every item the user rated, whatever the rating value.
inline AlignmentDegrees alignment_degrees(const RatingCorpus& corpus, const StereotypeModel& model,
                                          std::int64_t user_id,
                                          AggregationMode mode = AggregationMode::Cardinality) {
  const auto pos = corpus.find_user(user_id);
  if (!pos) throw LookupError("unknown user id " + std::to_string(user_id));
  return detail::degrees_at(corpus, resolve(model, corpus.vocabulary()), *pos, mode);
}

/// Degrees for every user, in corpus user order.
inline std::vector<AlignmentDegrees> all_alignment_degrees(
    const RatingCorpus& corpus, const StereotypeModel& model,
    AggregationMode mode = AggregationMode::Cardinality) {
  const auto masks = resolve(model, corpus.vocabulary());
  std::vector<AlignmentDegrees> out(corpus.users().size());
  for (std::size_t u = 0; u < out.size(); ++u) out[u] = detail::degrees_at(corpus, masks, u, mode);
  return out;
}

struct GenderBreakdown {
  std::size_t users = 0;
  std::size_t misaligned = 0;
  std::size_t ties = 0;
  friend bool operator==(const GenderBreakdown&, const GenderBreakdown&) = default;
};

struct PrevalenceReport {
  AggregationMode mode = AggregationMode::Cardinality;
  std::size_t total_users = 0;       // U
  std::size_t misaligned_count = 0;  // K
  double aligned_percent = 0;        // u_GS = (1 - K/U) * 100
  double misaligned_percent = 0;
  std::size_t tie_count = 0;  // d_male == d_female; counted as aligned
  GenderBreakdown male;
  GenderBreakdown female;
  friend bool operator==(const PrevalenceReport&, const PrevalenceReport&) = default;
};

/// A user is misaligned when a woman leans to the male set (d_male > d_female)
/// or a man to the female set (d_male < d_female). Ties are not misaligned.
inline PrevalenceReport prevalence(const RatingCorpus& corpus, const StereotypeModel& model,
                                   AggregationMode mode = AggregationMode::Cardinality) {
  if (corpus.users().empty()) throw DomainError("prevalence of an empty user set is undefined");
  const auto degrees = all_alignment_degrees(corpus, model, mode);
  PrevalenceReport r;
  r.mode = mode;
  r.total_users = degrees.size();
  for (std::size_t u = 0; u < degrees.size(); ++u) {
    const auto& d = degrees[u];
    const bool male = corpus.users()[u].gender == Gender::Male;
    auto& bucket = male ? r.male : r.female;
    ++bucket.users;
    if (d.d_male == d.d_female) {
      ++bucket.ties;
      ++r.tie_count;
      continue;
    }
    const bool misaligned = male ? d.d_male < d.d_female : d.d_male > d.d_female;
    if (misaligned) {
      ++bucket.misaligned;
      ++r.misaligned_count;
    }
  }
  const double share = static_cast<double>(r.misaligned_count) / static_cast<double>(r.total_users);
  r.aligned_percent = (1.0 - share) * 100.0;
  r.misaligned_percent = share * 100.0;
  return r;
}

inline nlohmann::json to_json(const GenderBreakdown& b) {
  return {{"users", b.users}, {"misaligned", b.misaligned}, {"ties", b.ties}};
}

inline nlohmann::json to_json(const PrevalenceReport& r) {
  return {{"mode", std::string(to_string(r.mode))},
          {"total_users", r.total_users},
          {"misaligned_count", r.misaligned_count},
          {"aligned_percent", r.aligned_percent},
          {"misaligned_percent", r.misaligned_percent},
          {"tie_count", r.tie_count},
          {"male", to_json(r.male)},
          {"female", to_json(r.female)}};
}

}  // namespace gsaudit
