#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "gsaudit/corpus.hpp"
#include "gsaudit/error.hpp"
#include "gsaudit/genre.hpp"
#include "gsaudit/rng.hpp"
#include "gsaudit/special_functions.hpp"
#include "gsaudit/text.hpp"

namespace gsaudit {

enum class PreferenceLevel : std::uint8_t { No, MinPrefer, MaxPrefer };

inline std::string_view to_string(PreferenceLevel l) {
  switch (l) {
    case PreferenceLevel::No: return "No";
    case PreferenceLevel::MinPrefer: return "MinPrefer";
    case PreferenceLevel::MaxPrefer: return "MaxPrefer";
  }
  return "?";
}

inline std::optional<PreferenceLevel> parse_preference_level(std::string_view s) {
  const auto t = text::to_lower(text::trim(s));
  if (t == "no") return PreferenceLevel::No;
  if (t == "minprefer") return PreferenceLevel::MinPrefer;
  if (t == "maxprefer") return PreferenceLevel::MaxPrefer;
  return std::nullopt;
}

/// Canonical genres plus the spellings used in the published survey tables.
inline GenreVocabulary survey_vocabulary() {
  auto vocab = canonical_vocabulary();
  vocab.add_alias("FlimNoir", "Film-Noir");
  vocab.add_alias("FilmNoir", "Film-Noir");
  vocab.add_alias("SciFi", "Sci-Fi");
  vocab.add_alias("Sport", "Sports");
  return vocab;
}

inline constexpr std::size_t kSurveyGenres = 21;

struct SurveyRecord {
  std::int64_t respondent_id = 0;
  Gender gender = Gender::Male;
  std::array<PreferenceLevel, kSurveyGenres> levels{};  // canonical vocabulary order
};

/// Dense design matrix with named columns.
struct DummyDesign {
  Eigen::MatrixXd x;
  std::vector<std::string> labels;
};

/// Intercept, then per genre (alphabetical) the MaxPrefer and MinPrefer
/// indicators against the reference level No.
inline DummyDesign encode_design(std::span<const SurveyRecord> records) {
  if (records.empty()) throw DomainError("survey design needs at least one record");
  const auto vocab = canonical_vocabulary();
  DummyDesign d;
  d.labels.push_back("(Intercept)");
  for (const auto& g : vocab.genres()) {
    d.labels.push_back("[" + g + "=MaxPrefer]");
    d.labels.push_back("[" + g + "=MinPrefer]");
  }
  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(records.size()),
                              static_cast<Eigen::Index>(d.labels.size()));
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    d.x(row, 0) = 1.0;
    for (std::size_t g = 0; g < kSurveyGenres; ++g) {
      const auto col = static_cast<Eigen::Index>(1 + 2 * g);
      if (records[r].levels[g] == PreferenceLevel::MaxPrefer) d.x(row, col) = 1.0;
      if (records[r].levels[g] == PreferenceLevel::MinPrefer) d.x(row, col + 1) = 1.0;
    }
  }
  return d;
}

/// 1 where the respondent's gender equals `positive`.
inline Eigen::VectorXd survey_outcomes(std::span<const SurveyRecord> records, Gender positive) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = records[i].gender == positive ? 1.0 : 0.0;
  }
  return y;
}

/// Reads `gender,<21 genre columns>`; genre headers may come in any order.
inline std::vector<SurveyRecord> parse_survey_csv(std::string_view content,
                                                  const std::string& source = "survey.csv") {
  const auto vocab = survey_vocabulary();
  std::vector<SurveyRecord> out;
  std::vector<std::size_t> genre_of_column;
  std::vector<std::string> header;
  text::for_each_line(content, [&](std::string_view line, std::size_t line_no) {
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (text::trim(line).empty()) return;
    const auto fields = text::parse_csv_record(line);
    if (!fields) throw IngestError(source + " line " + std::to_string(line_no) + ": unterminated quote");
    if (header.empty()) {
      header = *fields;
      if (header.size() != 1 + kSurveyGenres || text::to_lower(text::trim(header[0])) != "gender") {
        throw IngestError(source + ": header must be 'gender' followed by the " +
                          std::to_string(kSurveyGenres) + " genre columns");
      }
      std::vector<char> seen(kSurveyGenres, 0);
      for (std::size_t c = 1; c < header.size(); ++c) {
        const auto target = vocab.resolve(text::trim(header[c]));
        if (!target || target->kind != AliasTarget::Kind::Genre) {
          throw IngestError(source + ": unknown genre column '" + header[c] + "'");
        }
        const auto g = target->genre.index;
        if (seen[g]) throw IngestError(source + ": duplicate genre column '" + header[c] + "'");
        seen[g] = 1;
        genre_of_column.push_back(g);
      }
      return;
    }
    const auto where = source + " line " + std::to_string(line_no);
    if (fields->size() != header.size()) {
      throw IngestError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields->size()));
    }
    SurveyRecord rec;
    rec.respondent_id = static_cast<std::int64_t>(out.size() + 1);
    const auto gender = parse_gender((*fields)[0]);
    if (!gender) throw IngestError(where + ", column gender: unknown gender '" + (*fields)[0] + "'");
    rec.gender = *gender;
    for (std::size_t c = 1; c < fields->size(); ++c) {
      const auto level = parse_preference_level((*fields)[c]);
      if (!level) {
        throw IngestError(where + ", column " + header[c] + ": unknown level '" + (*fields)[c] +
                          "' (expected No|MinPrefer|MaxPrefer)");
      }
      rec.levels[genre_of_column[c - 1]] = *level;
    }
    out.push_back(rec);
  });
  if (header.empty()) throw IngestError(source + ": empty file");
  if (out.empty()) throw IngestError(source + ": no survey records");
  return out;
}

inline std::string survey_csv(std::span<const SurveyRecord> records) {
  const auto vocab = canonical_vocabulary();
  std::string out = "gender";
  for (const auto& g : vocab.genres()) out += "," + g;
  out += "\n";
  for (const auto& r : records) {
    out += r.gender == Gender::Male ? "M" : "F";
    for (const auto l : r.levels) out += "," + std::string(to_string(l));
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Maximum-likelihood fit

inline constexpr double kWaldZ = 1.96;

struct RegressionRow {
  std::string term;
  double b = 0.0;
  double se = 0.0;
  double odds_ratio = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double p_value = 0.0;
};

/// odds = exp(b), CI = exp(b -/+ 1.96 SE), two-sided Wald p.
inline RegressionRow make_row(std::string term, double b, double se) {
  return {std::move(term),       b, se, std::exp(b), std::exp(b - kWaldZ * se),
          std::exp(b + kWaldZ * se), two_sided_p(b / se)};
}

struct GoodnessOfFit {
  double pearson = 0.0;
  double deviance = 0.0;
  long df = 0;
  std::size_t patterns = 0;
  std::optional<double> pearson_p;   // absent when df <= 0
  std::optional<double> deviance_p;
  bool saturated = false;            // df <= 0
};

struct FitSummary {
  std::vector<RegressionRow> rows;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  std::vector<double> log_likelihood;  // per IRLS iterate, starting at b = 0
  int iterations = 0;
  double gradient_norm = 0.0;
  GoodnessOfFit gof;
};

inline double bernoulli_log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const Eigen::VectorXd& b) {
  const Eigen::VectorXd eta = x * b;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    // y*eta - log(1 + e^eta), evaluated stably
    const double e = eta(i);
    ll += y(i) * e - (std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e))));
  }
  return ll;
}

namespace detail {

/// ll(eta + d) - ll(eta), summed row by row so the result keeps its own
/// precision instead of that of ll.
inline double log_likelihood_change(const Eigen::VectorXd& y, const Eigen::VectorXd& eta,
                                    const Eigen::VectorXd& d) {
  auto softplus = [](double e) { return std::max(e, 0.0) + std::log1p(std::exp(-std::abs(e))); };
  double change = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double a = eta(i);
    const double di = d(i);
    // softplus(a + d) - softplus(a) = log1p(sigmoid(a) * expm1(d))
    const double sp = std::abs(di) < 1.0 ? std::log1p(1.0 / (1.0 + std::exp(-a)) * std::expm1(di))
                                         : softplus(a + di) - softplus(a);
    change += y(i) * di - sp;
  }
  return change;
}

inline double logistic(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline void check_rank(const Eigen::MatrixXd& x, const std::vector<std::string>& labels) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == x.cols()) return;
  std::vector<std::string> dependent;
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = rank; k < x.cols(); ++k) dependent.push_back(labels[perm(k)]);
  std::sort(dependent.begin(), dependent.end());
  std::string list;
  for (const auto& d : dependent) list += (list.empty() ? "" : ", ") + d;
  throw DegeneracyError("design is rank deficient (rank " + std::to_string(rank) + " of " +
                            std::to_string(x.cols()) + "); dependent columns: " + list,
                        dependent);
}

}  // namespace detail

/// Covariate-pattern goodness of fit for fitted probabilities `p`.
inline GoodnessOfFit goodness_of_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& p) {
  struct Pattern {
    double n = 0, events = 0, expected = 0;
  };
  std::map<std::vector<double>, Pattern> patterns;
  std::vector<double> key(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) key[static_cast<std::size_t>(c)] = x(i, c);
    auto& pat = patterns[key];
    pat.n += 1;
    pat.events += y(i);
    pat.expected += p(i);  // rows of one pattern share p
  }
  GoodnessOfFit g;
  g.patterns = patterns.size();
  for (const auto& [_, pat] : patterns) {
    const double pj = pat.expected / pat.n;
    const double var = pat.n * pj * (1.0 - pj);
    if (var > 0) g.pearson += (pat.events - pat.expected) * (pat.events - pat.expected) / var;
    auto term = [](double obs, double exp) { return obs > 0 ? obs * std::log(obs / exp) : 0.0; };
    g.deviance += 2.0 * (term(pat.events, pat.expected) +
                         term(pat.n - pat.events, pat.n - pat.expected));
  }
  g.df = static_cast<long>(g.patterns) - static_cast<long>(x.cols());
  g.saturated = g.df <= 0;
  if (!g.saturated) {
    g.pearson_p = chi_square_sf(g.pearson, static_cast<double>(g.df));
    g.deviance_p = chi_square_sf(g.deviance, static_cast<double>(g.df));
  }
  return g;
}

/// Binary logistic regression by IRLS (Newton) with step halving, to a
/// gradient inf-norm of 1e-8. Step acceptance uses the per-row ll change, so
/// ascent stays measurable when the gain is far below the ulp of ll. Throws DegeneracyError on rank deficiency or
/// (quasi-)separation, naming the offending columns.
inline FitSummary fit_mle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const std::vector<std::string>& labels, int max_iterations = 100) {
  if (x.rows() != y.size()) throw DimensionError("outcome count differs from design rows");
  if (static_cast<std::size_t>(x.cols()) != labels.size()) {
    throw DimensionError("column label count differs from design columns");
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw DomainError("outcomes must be 0 or 1");
  }
  detail::check_rank(x, labels);

  const Eigen::Index p = x.cols();
  FitSummary fit;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  double ll = bernoulli_log_likelihood(x, y, b);
  fit.log_likelihood.push_back(ll);
  Eigen::VectorXd mu(x.rows());
  Eigen::VectorXd w(x.rows());
  auto refresh = [&] {
    const Eigen::VectorXd eta = x * b;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      mu(i) = detail::logistic(eta(i));
      w(i) = mu(i) * (1.0 - mu(i));
    }
  };
  refresh();
  Eigen::VectorXd grad = x.transpose() * (y - mu);
  bool converged = false;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-8) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    const Eigen::VectorXd step = info.ldlt().solve(grad);
    const Eigen::VectorXd eta = x * b;
    const Eigen::VectorXd d_eta = x * step;
    double t = 1.0;
    double gain = detail::log_likelihood_change(y, eta, d_eta);
    for (int halving = 0; halving < 50 && !(gain > 0.0); ++halving) {
      t *= 0.5;
      gain = detail::log_likelihood_change(y, eta, t * d_eta);
    }
    if (!(gain > 0.0)) {
      // no ascent left at working precision; accept if Newton predicts none either
      converged = 0.5 * grad.dot(step) <= 1e-14 * (1.0 + std::abs(ll));
      break;
    }
    b += t * step;
    ll += gain;
    fit.log_likelihood.push_back(ll);
    refresh();
    grad = x.transpose() * (y - mu);
  }
  fit.iterations = iter;
  fit.gradient_norm = grad.lpNorm<Eigen::Infinity>();

  const Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
  Eigen::VectorXd se(p);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  const bool invertible = lu.isInvertible();
  if (invertible) {
    const Eigen::MatrixXd cov = lu.inverse();
    for (Eigen::Index k = 0; k < p; ++k) se(k) = std::sqrt(std::max(cov(k, k), 0.0));
  }
  std::vector<std::string> offending;
  for (Eigen::Index k = 0; k < p; ++k) {
    if (!invertible || !std::isfinite(b(k)) || std::abs(b(k)) > 15.0 || !(se(k) <= 100.0)) {
      offending.push_back(labels[static_cast<std::size_t>(k)]);
    }
  }
  if (!offending.empty() || !converged) {
    std::string list;
    for (const auto& o : offending) list += (list.empty() ? "" : ", ") + o;
    throw DegeneracyError(
        "logistic fit diverges (quasi-complete separation suspected" +
            std::string(converged ? "" : ", no convergence") + ")" +
            (list.empty() ? std::string() : "; offending columns: " + list),
        offending);
  }
  fit.coefficients = b;
  fit.standard_errors = se;
  for (Eigen::Index k = 0; k < p; ++k) {
    fit.rows.push_back(make_row(labels[static_cast<std::size_t>(k)], b(k), se(k)));
  }
  fit.gof = goodness_of_fit(x, y, mu);
  return fit;
}

inline FitSummary fit_mle(const DummyDesign& design, const Eigen::VectorXd& y) {
  return fit_mle(design.x, y, design.labels);
}

// ---------------------------------------------------------------------------
// Synthetic surveys

/// Coefficients of the published male-positive fit, in design column order
/// (intercept first, then MaxPrefer/MinPrefer per alphabetical genre). The
/// intercept is not published and is set to 0.
inline Eigen::VectorXd published_male_coefficients() {
  // genre order: Action .. Western (canonical vocabulary)
  static const double pairs[kSurveyGenres][2] = {
      {1.69, 0.869},    {1.348, 0.555},   {-1.024, -0.687}, {0.506, 1.036},  {1.299, 0.055},
      {1.295, 0.339},   {0.237, -0.459},  {-0.905, -0.163}, {-1.899, -1.66}, {-0.818, -0.612},
      {0.017, -0.319},  {-1.576, -0.786}, {0.673, 0.898},   {-0.148, 0.224}, {-0.787, -0.317},
      {-0.927, 0.017},  {0.303, 0.221},   {-1.753, -0.562}, {-0.72, -0.809}, {1.582, 0.369},
      {0.551, 0.057}};
  Eigen::VectorXd b(1 + 2 * kSurveyGenres);
  b(0) = 0.0;
  for (std::size_t g = 0; g < kSurveyGenres; ++g) {
    b(static_cast<Eigen::Index>(1 + 2 * g)) = pairs[g][0];
    b(static_cast<Eigen::Index>(2 + 2 * g)) = pairs[g][1];
  }
  return b;
}

/// n respondents with uniformly drawn levels; gender is Male with
/// probability sigmoid(x . coefficients).
inline std::vector<SurveyRecord> synthetic_survey(std::size_t n, const Eigen::VectorXd& coefficients,
                                                  std::uint64_t seed) {
  if (coefficients.size() != static_cast<Eigen::Index>(1 + 2 * kSurveyGenres)) {
    throw DimensionError("synthetic survey needs " + std::to_string(1 + 2 * kSurveyGenres) +
                         " coefficients");
  }
  Rng rng(seed);
  std::vector<SurveyRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = out[i];
    r.respondent_id = static_cast<std::int64_t>(i + 1);
    double eta = coefficients(0);
    for (std::size_t g = 0; g < kSurveyGenres; ++g) {
      r.levels[g] = static_cast<PreferenceLevel>(rng.below(3));
      if (r.levels[g] == PreferenceLevel::MaxPrefer) eta += coefficients(static_cast<Eigen::Index>(1 + 2 * g));
      if (r.levels[g] == PreferenceLevel::MinPrefer) eta += coefficients(static_cast<Eigen::Index>(2 + 2 * g));
    }
    r.gender = rng.bernoulli(detail::logistic(eta)) ? Gender::Male : Gender::Female;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

inline nlohmann::json to_json(const GoodnessOfFit& g) {
  nlohmann::json j = {{"pearson_chi_square", g.pearson},
                      {"deviance", g.deviance},
                      {"df", g.df},
                      {"covariate_patterns", g.patterns},
                      {"saturated", g.saturated}};
  j["pearson_p"] = g.pearson_p ? nlohmann::json(*g.pearson_p) : nlohmann::json(nullptr);
  j["deviance_p"] = g.deviance_p ? nlohmann::json(*g.deviance_p) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const FitSummary& f) {
  auto rows = nlohmann::json::array();
  for (const auto& r : f.rows) {
    rows.push_back({{"term", r.term},
                    {"b", r.b},
                    {"se", r.se},
                    {"odds_ratio", r.odds_ratio},
                    {"ci_lower", r.ci_lower},
                    {"ci_upper", r.ci_upper},
                    {"p_value", r.p_value}});
  }
  return {{"rows", std::move(rows)},
          {"iterations", f.iterations},
          {"gradient_norm", f.gradient_norm},
          {"log_likelihood", f.log_likelihood.back()},
          {"ci_z", kWaldZ},
          {"goodness_of_fit", to_json(f.gof)}};
}

/// Table-shaped CSV: one row per indicator plus a reference row per genre
/// and the constant last.
inline std::string fit_table_csv(const FitSummary& f) {
  std::string out = "Variables,Logistic Coefficient,Standard Error,Odds Ratio,CI Lower,CI Upper,p-value\n";
  char buffer[256];
  auto emit = [&](const RegressionRow& r) {
    std::snprintf(buffer, sizeof buffer, ",%.6g,%.6g,%.6g,%.6g,%.6g,%.6g\n", r.b, r.se, r.odds_ratio,
                  r.ci_lower, r.ci_upper, r.p_value);
    out += text::csv_escape(r.term) + buffer;
  };
  for (std::size_t k = 1; k < f.rows.size(); ++k) {
    emit(f.rows[k]);
    const auto& term = f.rows[k].term;
    if (term.ends_with("=MinPrefer]")) {
      out += text::csv_escape(term.substr(0, term.size() - 11) + "=No]") + ",Ref,,,,,\n";
    }
  }
  if (!f.rows.empty()) emit(f.rows.front());
  return out;
}

}  // namespace gsaudit
