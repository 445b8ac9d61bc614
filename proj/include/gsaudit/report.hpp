#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsaudit/corpus.hpp"
#include "gsaudit/stereotype.hpp"
#include "gsaudit/text.hpp"

namespace gsaudit {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportSchema = "gs-audit/report-v1";

inline nlohmann::json to_json(const CorpusStats& s) {
  return {{"users", s.users},
          {"male", s.male},
          {"female", s.female},
          {"male_percent", s.male_percent},
          {"female_percent", s.female_percent},
          {"movie_records", s.movie_records},
          {"max_movie_id", s.max_movie_id},
          {"movie_columns", s.movie_columns},
          {"ratings", s.ratings},
          {"genres", s.genres},
          {"density", s.density},
          {"density_percent", s.density_percent}};
}

inline nlohmann::json to_json(const IngestReport& r) {
  auto dropped = nlohmann::json::array();
  for (const auto& d : r.dropped_movies) dropped.push_back({{"movie_id", d.movie_id}, {"reason", d.reason}});
  nlohmann::json aliases = nlohmann::json::object();
  for (const auto& [raw, use] : r.alias_applications) {
    aliases[raw] = {{"target", use.target}, {"count", use.count}};
  }
  return {{"dropped_movies", std::move(dropped)},
          {"dropped_ratings", r.dropped_ratings},
          {"duplicate_ratings", r.duplicate_ratings},
          {"overrides_applied", r.overrides_applied},
          {"alias_applications", std::move(aliases)},
          {"warnings", r.warnings}};
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t = std::chrono::system_clock::now()) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

/// Everything needed to re-derive a report.
struct RunManifest {
  std::vector<std::string> command_line;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> dataset_hashes;
  std::optional<StereotypeModel> stereotype_model;
  nlohmann::json config = nlohmann::json::object();
  std::string version = kVersion;
  std::string started_at;
  std::string finished_at;
};

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j = {{"command_line", m.command_line},
                      {"dataset_hashes", m.dataset_hashes},
                      {"config", m.config},
                      {"version", m.version},
                      {"started_at", m.started_at},
                      {"finished_at", m.finished_at}};
  j["seed"] = m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr);
  j["stereotype_model"] = m.stereotype_model ? to_json(*m.stereotype_model) : nlohmann::json(nullptr);
  return j;
}

/// Report document skeleton; callers add command-specific sections.
inline nlohmann::json make_report(std::string_view command, const RunManifest& manifest) {
  return {{"schema", kReportSchema}, {"command", std::string(command)}, {"manifest", to_json(manifest)}};
}

inline void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& j) {
  text::write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace gsaudit
