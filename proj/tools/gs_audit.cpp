// gs_audit: command-line front end for the gender-stereotype audit toolkit.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gsaudit/gsaudit.hpp"

namespace fs = std::filesystem;
using namespace gsaudit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNonConvergence = 3;
constexpr int kExitDegenerate = 4;

struct Context {
  std::vector<std::string> argv;
  std::string started_at = utc_timestamp();
};

RunManifest base_manifest(const Context& ctx) {
  RunManifest m;
  m.command_line = ctx.argv;
  m.started_at = ctx.started_at;
  return m;
}

void finish(RunManifest& m, nlohmann::json& report) {
  m.finished_at = utc_timestamp();
  report["manifest"] = to_json(m);
}

GenreVocabulary vocabulary_for(const std::string& format, const std::string& genre_map) {
  auto vocab = format == "ml1m" ? ml1m_alias_map() : canonical_vocabulary();
  if (!genre_map.empty()) vocab.load_alias_file(genre_map);
  return vocab;
}

RatingCorpus load_corpus(const std::string& format, const fs::path& root, const std::string& genre_map,
                         const std::string& override_file) {
  const auto vocab = vocabulary_for(format, genre_map);
  const auto overrides = override_file.empty() ? MovieOverrides{} : load_overrides(override_file);
  if (format == "ml1m") return load_ml1m(root, vocab, overrides);
  if (format == "interchange") return load_interchange(root, vocab, overrides);
  throw ConfigError("unknown corpus format '" + format + "' (expected ml1m|interchange)");
}

/// Compares an interchange corpus with the hashes its ingest run pinned.
/// Returns "verified", "drift" or "unpinned"; drift is also reported on stderr.
std::string check_pins(const RatingCorpus& corpus, const fs::path& root) {
  const auto pin_file = root / "ingest_report.json";
  if (corpus.provenance().format != "interchange" || !fs::is_regular_file(pin_file)) return "unpinned";
  nlohmann::json pins;
  try {
    pins = nlohmann::json::parse(text::read_file(pin_file)).value("interchange_hashes", nlohmann::json::object());
  } catch (const nlohmann::json::exception&) {
    return "unpinned";
  }
  if (pins.empty()) return "unpinned";
  std::string drifted;
  for (const auto& [name, hash] : corpus.provenance().file_hashes) {
    if (pins.contains(name) && pins[name] != hash) drifted += (drifted.empty() ? "" : ", ") + name;
  }
  if (drifted.empty()) return "verified";
  std::fprintf(stderr, "warning: corpus files changed since ingest: %s\n", drifted.c_str());
  return "drift";
}

void print_stats(const CorpusStats& s) {
  std::printf("users          %zu (male %zu, %.0f%%; female %zu, %.0f%%)\n", s.users, s.male,
              s.male_percent, s.female, s.female_percent);
  std::printf("movie records  %zu (max movie id %lld, %zu columns)\n", s.movie_records,
              static_cast<long long>(s.max_movie_id), s.movie_columns);
  std::printf("ratings        %zu\n", s.ratings);
  std::printf("genres         %zu\n", s.genres);
  std::printf("density        %.2f%%\n", s.density_percent);
}

void print_metrics_header() {
  std::printf("%-10s %-6s %-9s %8s %8s %8s %8s %8s %8s %8s\n", "classifier", "gs", "harness", "acc",
              "acc_m", "acc_f", "prec", "recall", "f", "auc");
}

void print_metrics_row(const std::string& classifier, bool with_gs, const std::string& harness,
                       const MetricSet& m) {
  std::printf("%-10s %-6s %-9s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n", classifier.c_str(),
              with_gs ? "yes" : "no", harness.c_str(), m.accuracy, m.accuracy_male,
              m.accuracy_female, m.precision, m.recall, m.f_measure, m.auc);
}

struct Harness {
  bool cv = false;
  double test_fraction = 0.2;
  std::size_t k = 10;
  std::string label;
};

Harness parse_harness(const std::string& spec) {
  const auto colon = spec.find(':');
  const auto name = spec.substr(0, colon);
  const auto arg = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  Harness h;
  h.label = spec;
  if (name == "holdout") {
    if (!arg.empty()) {
      const auto f = text::parse_number<double>(arg);
      if (!f || !(*f > 0.0 && *f < 1.0)) throw ConfigError("holdout fraction must lie in (0, 1): '" + arg + "'");
      h.test_fraction = *f;
    }
    return h;
  }
  if (name == "cv") {
    h.cv = true;
    if (!arg.empty()) {
      const auto k = text::parse_number<std::size_t>(arg);
      if (!k || *k < 2) throw ConfigError("cv fold count must be an integer >= 2: '" + arg + "'");
      h.k = *k;
    }
    return h;
  }
  throw ConfigError("unknown harness '" + spec + "' (expected holdout:<fraction> or cv:<k>)");
}

nlohmann::json read_json_file(const fs::path& path) {
  try {
    return nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<FitConfig> load_grid(const fs::path& path, ClassifierKind kind) {
  const auto j = read_json_file(path);
  if (!j.is_array() || j.empty()) throw ConfigError(path.string() + ": grid must be a non-empty JSON array");
  std::vector<FitConfig> grid;
  for (const auto& cell : j) grid.push_back(fit_config_from_json(cell, default_config(kind)));
  return grid;
}

// ---------------------------------------------------------------------------

struct IngestArgs {
  std::string format = "ml1m";
  std::string root;
  std::string genre_map;
  std::string override_file;
  std::string out;
};

int cmd_ingest(const Context& ctx, const IngestArgs& a) {
  auto manifest = base_manifest(ctx);
  const auto corpus = load_corpus(a.format, a.root, a.genre_map, a.override_file);
  const fs::path out(a.out);
  write_interchange(corpus, out);
  const auto stats = corpus_stats(corpus);
  print_stats(stats);
  manifest.dataset_hashes = corpus.provenance().file_hashes;
  nlohmann::json pins = nlohmann::json::object();
  for (const char* name : {"users.csv", "movies.csv", "ratings.csv"}) pins[name] = sha256_file(out / name);
  manifest.config = {{"format", a.format},
                     {"genre_map", a.genre_map.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.genre_map)},
                     {"override", a.override_file.empty() ? nlohmann::json(nullptr) : nlohmann::json(a.override_file)}};
  auto report = make_report("ingest", manifest);
  report["corpus_stats"] = to_json(stats);
  report["ingest"] = to_json(corpus.provenance().ingest);
  report["interchange_hashes"] = std::move(pins);
  finish(manifest, report);
  write_json_atomic(out / "ingest_report.json", report);
  const auto& ingest = corpus.provenance().ingest;
  if (!ingest.dropped_movies.empty()) {
    std::printf("dropped        %zu movies, %zu ratings\n", ingest.dropped_movies.size(),
                ingest.dropped_ratings);
  }
  for (const auto& w : ingest.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return kExitOk;
}

struct CorpusArgs {
  std::string corpus;
  std::string format = "interchange";
  std::string genre_map;
  std::string model;
  std::string mode = "cardinality";
  std::string out;
};

StereotypeModel stereotype_from(const std::string& path) {
  return path.empty() ? default_model() : load_stereotype_model(path);
}

int cmd_prevalence(const Context& ctx, const CorpusArgs& a) {
  auto manifest = base_manifest(ctx);
  const auto corpus = load_corpus(a.format, a.corpus, a.genre_map, "");
  const auto model = stereotype_from(a.model);
  const auto mode = parse_aggregation_mode(a.mode);
  const auto prev = prevalence(corpus, model, mode);
  manifest.dataset_hashes = corpus.provenance().file_hashes;
  manifest.stereotype_model = model;
  manifest.config = {{"mode", a.mode}, {"corpus_format", a.format}, {"corpus_pin", check_pins(corpus, a.corpus)}};
  auto report = make_report("prevalence", manifest);
  report["corpus_stats"] = to_json(corpus_stats(corpus));
  report["prevalence"] = to_json(prev);
  finish(manifest, report);
  write_json_atomic(a.out, report);
  std::printf("mode        %s\n", std::string(to_string(mode)).c_str());
  std::printf("aligned     %.2f%% (%zu of %zu users)\n", prev.aligned_percent,
              prev.total_users - prev.misaligned_count, prev.total_users);
  std::printf("misaligned  %.2f%% (%zu users)\n", prev.misaligned_percent, prev.misaligned_count);
  std::printf("ties        %zu\n", prev.tie_count);
  return kExitOk;
}

struct AttackArgs {
  CorpusArgs corpus;
  std::string classifier = "lr";
  bool with_gs = true;
  bool no_gs = false;
  std::string harness = "holdout:0.2";
  std::uint64_t seed = 0;
  std::string grid;
  std::string config;
  std::string roc_csv;
  std::string folds_csv;
  bool strict = false;
  std::string out;
};

int cmd_attack(const Context& ctx, const AttackArgs& a) {
  auto manifest = base_manifest(ctx);
  const auto kind = parse_classifier_kind(a.classifier);
  const auto harness = parse_harness(a.harness);
  const bool with_gs = !a.no_gs;
  const auto corpus = load_corpus(a.corpus.format, a.corpus.corpus, a.corpus.genre_map, "");
  const auto mode = parse_aggregation_mode(a.corpus.mode);
  std::optional<StereotypeModel> model;
  if (with_gs) model = stereotype_from(a.corpus.model);
  const auto features = attack_features(corpus, model, mode);

  manifest.seed = a.seed;
  const auto pin_status = check_pins(corpus, a.corpus.corpus);
  manifest.dataset_hashes = corpus.provenance().file_hashes;
  manifest.stereotype_model = model;
  nlohmann::json result = {{"classifier", a.classifier}, {"with_gs", with_gs}, {"harness", a.harness}};
  bool converged = true;
  MetricSet shown;
  if (!harness.cv) {
    auto config = default_config(kind);
    if (!a.config.empty()) config = fit_config_from_json(read_json_file(a.config), config);
    config.seed = a.seed;
    const auto r = run_holdout(features, kind, config, harness.test_fraction, a.seed);
    result["holdout"] = to_json(r);
    converged = r.converged;
    shown = r.metrics;
    if (!a.roc_csv.empty()) text::write_file_atomic(a.roc_csv, roc_csv(roc_points(r.scores, r.labels)));
    manifest.config = {{"fit", to_json(config)}, {"test_fraction", harness.test_fraction}, {"mode", a.corpus.mode},
                       {"corpus_pin", pin_status}};
  } else {
    auto grid = a.grid.empty() ? default_grid(kind) : load_grid(a.grid, kind);
    for (auto& g : grid) g.seed = a.seed;
    const auto r = run_cv(features, kind, grid, harness.k, a.seed);
    result["cv"] = to_json(r);
    converged = r.all_converged();
    if (!a.folds_csv.empty()) text::write_file_atomic(a.folds_csv, fold_csv(r));
    auto grid_json = nlohmann::json::array();
    for (const auto& g : grid) grid_json.push_back(to_json(g));
    manifest.config = {{"grid", grid_json}, {"k", harness.k}, {"inner_k", 3}, {"mode", a.corpus.mode},
                       {"corpus_pin", pin_status}};
    for (const auto& [name, field] : metric_fields()) shown.*field = r.summary.at(name).mean;
  }
  result["converged"] = converged;
  auto report = make_report("attack", manifest);
  report["corpus_stats"] = to_json(corpus_stats(corpus));
  report["results"] = nlohmann::json::array({result});
  finish(manifest, report);
  write_json_atomic(a.out, report);

  print_metrics_header();
  print_metrics_row(a.classifier, with_gs, harness.cv ? "cv-mean" : "holdout", shown);
  if (harness.cv) {
    const auto& cv = result["cv"]["summary"];
    std::printf("%-27s %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n", "(population sd)",
                cv["accuracy"]["stddev"].get<double>(), cv["accuracy_male"]["stddev"].get<double>(),
                cv["accuracy_female"]["stddev"].get<double>(), cv["precision"]["stddev"].get<double>(),
                cv["recall"]["stddev"].get<double>(), cv["f_measure"]["stddev"].get<double>(),
                cv["auc"]["stddev"].get<double>());
  }
  if (!converged) {
    std::fprintf(stderr, "warning: solver did not converge within max_iterations\n");
    if (a.strict) return kExitNonConvergence;
  }
  return kExitOk;
}

struct SurveyArgs {
  std::string input;
  std::string out;
};

int cmd_survey_fit(const Context& ctx, const SurveyArgs& a) {
  auto manifest = base_manifest(ctx);
  const auto records = parse_survey_csv(text::read_file(a.input), fs::path(a.input).filename().string());
  const auto design = encode_design(records);
  const auto male = fit_mle(design, survey_outcomes(records, Gender::Male));
  const auto female = fit_mle(design, survey_outcomes(records, Gender::Female));
  const fs::path out(a.out);
  text::write_file_atomic(out / "male_positive.csv", fit_table_csv(male));
  text::write_file_atomic(out / "female_positive.csv", fit_table_csv(female));
  write_json_atomic(out / "male_positive.json", to_json(male));
  write_json_atomic(out / "female_positive.json", to_json(female));
  manifest.dataset_hashes = {{fs::path(a.input).filename().string(), sha256_file(a.input)}};
  manifest.config = {{"ci_z", kWaldZ}, {"gradient_tolerance", 1e-8}};
  auto report = make_report("survey-fit", manifest);
  report["survey"] = {{"respondents", records.size()},
                      {"male_positive", to_json(male)},
                      {"female_positive", to_json(female)}};
  finish(manifest, report);
  write_json_atomic(out / "report.json", report);

  std::printf("%-24s %9s %7s %8s %8s %8s %7s\n", "term (male positive)", "b", "se", "odds", "lower", "upper", "p");
  for (const auto& r : male.rows) {
    std::printf("%-24s %9.3f %7.3f %8.3f %8.3f %8.3f %7.3f\n", r.term.c_str(), r.b, r.se,
                r.odds_ratio, r.ci_lower, r.ci_upper, r.p_value);
  }
  const auto& g = male.gof;
  std::printf("goodness of fit: pearson %.3f, deviance %.3f, df %ld", g.pearson, g.deviance, g.df);
  if (g.pearson_p) std::printf(", pearson p %.3f", *g.pearson_p);
  if (g.saturated) std::printf(" (saturated)");
  std::printf("\n");
  return kExitOk;
}

struct SynthArgs {
  std::size_t n = 630;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_survey_synth(const SynthArgs& a) {
  const auto records = synthetic_survey(a.n, published_male_coefficients(), a.seed);
  text::write_file_atomic(a.out, survey_csv(records));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  ctx.argv.assign(argv, argv + argc);

  CLI::App app{"Gender-stereotype audit toolkit for movie-rating corpora"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Load a raw corpus and write the interchange layout");
  ingest_cmd->add_option("--format", ingest.format, "ml1m|interchange")->check(CLI::IsMember({"ml1m", "interchange"}));
  ingest_cmd->add_option("--root", ingest.root, "Input directory")->required();
  ingest_cmd->add_option("--genre-map", ingest.genre_map, "Extra raw,canonical genre aliases");
  ingest_cmd->add_option("--override", ingest.override_file, "Per-movie genre overrides (movie_id,G1|G2)");
  ingest_cmd->add_option("--out", ingest.out, "Output directory")->required();

  auto add_corpus_options = [](CLI::App* cmd, CorpusArgs& c) {
    cmd->add_option("--corpus", c.corpus, "Corpus directory")->required();
    cmd->add_option("--corpus-format", c.format, "interchange|ml1m")->check(CLI::IsMember({"ml1m", "interchange"}));
    cmd->add_option("--genre-map", c.genre_map, "Extra raw,canonical genre aliases");
    cmd->add_option("--model", c.model, "Stereotype model JSON (default: built-in)");
    cmd->add_option("--mode", c.mode, "cardinality|item-count")->check(CLI::IsMember({"cardinality", "item-count"}));
  };

  CorpusArgs prev;
  auto* prev_cmd = app.add_subcommand("prevalence", "Share of users aligned with the stereotype");
  add_corpus_options(prev_cmd, prev);
  prev_cmd->add_option("--out", prev.out, "Report JSON path")->required();

  AttackArgs attack;
  auto* attack_cmd = app.add_subcommand("attack", "Gender-inference attack");
  add_corpus_options(attack_cmd, attack.corpus);
  attack_cmd->add_option("--classifier", attack.classifier, "lr|svm|adaboost|gbt")
      ->check(CLI::IsMember({"lr", "svm", "adaboost", "gbt"}));
  auto* with_gs = attack_cmd->add_flag("--with-gs", attack.with_gs, "Append stereotype degrees (default)");
  auto* no_gs = attack_cmd->add_flag("--no-gs", attack.no_gs, "Ratings only");
  with_gs->excludes(no_gs);
  attack_cmd->add_option("--harness", attack.harness, "holdout:<fraction> or cv:<k>");
  attack_cmd->add_option("--seed", attack.seed, "Seed for splits and solvers");
  attack_cmd->add_option("--grid", attack.grid, "JSON array of fit configs (cv)");
  attack_cmd->add_option("--config", attack.config, "JSON fit config (holdout)");
  attack_cmd->add_option("--roc-csv", attack.roc_csv, "Write ROC points (holdout)");
  attack_cmd->add_option("--folds-csv", attack.folds_csv, "Write per-fold metrics (cv)");
  attack_cmd->add_flag("--strict", attack.strict, "Exit 3 when a solver does not converge");
  attack_cmd->add_option("--out", attack.corpus.out, "Report JSON path")->required();

  SurveyArgs survey;
  auto* survey_cmd = app.add_subcommand("survey-fit", "Logistic regression on survey genre preferences");
  survey_cmd->add_option("--input", survey.input, "Survey CSV")->required();
  survey_cmd->add_option("--out", survey.out, "Output directory")->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("survey-synth", "Write a synthetic survey CSV");
  synth_cmd->add_option("--n", synth.n, "Respondents");
  synth_cmd->add_option("--seed", synth.seed, "Seed");
  synth_cmd->add_option("--out", synth.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*ingest_cmd) return cmd_ingest(ctx, ingest);
    if (*prev_cmd) return cmd_prevalence(ctx, prev);
    if (*attack_cmd) {
      attack.out = attack.corpus.out;
      return cmd_attack(ctx, attack);
    }
    if (*survey_cmd) return cmd_survey_fit(ctx, survey);
    if (*synth_cmd) return cmd_survey_synth(synth);
  } catch (const DegeneracyError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitDegenerate;
  } catch (const ConvergenceError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
