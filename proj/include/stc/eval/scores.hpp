// stc/eval/scores.hpp

// Copyright 2026  The STC Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef STC_EVAL_SCORES_HPP_
#define STC_EVAL_SCORES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "stc/eval/responses.hpp"

namespace stc {

inline constexpr double kChanceLevel = 1.0 / kCandidateCount;

/// S = (1/N) sum_n (P_n . C_n) / |P_n|_1.
inline double SimilarityScore(const std::vector<SimilarityResponse> &responses) {
  if (responses.empty()) Fail(ErrorKind::kEmptyInput, "no similarity responses");
  double sum = 0.0;
  for (const auto &r : responses) {
    r.Validate();
    sum += (r.predictions[std::size_t(r.correct_index)] ? 1.0 : 0.0) / double(r.Selected());
  }
  return sum / double(responses.size());
}

struct MosResult {
  double mean = 0.0;
  double ci_halfwidth = 0.0;
  std::size_t n = 0;
};

/// Mean with a Student-t confidence half-width on n - 1 degrees of freedom.
inline MosResult MosWithCi(const std::vector<double> &ratings, double confidence = 0.95) {
  if (ratings.empty()) Fail(ErrorKind::kEmptyInput, "no ratings");
  if (!(confidence > 0.0 && confidence < 1.0)) Fail(ErrorKind::kConfig, "confidence must be in (0, 1)");
  MosResult r;
  r.n = ratings.size();
  r.mean = std::accumulate(ratings.begin(), ratings.end(), 0.0) / double(r.n);
  if (r.n < 2) return r;
  double ss = 0.0;
  for (double x : ratings) ss += (x - r.mean) * (x - r.mean);
  const double sd = std::sqrt(ss / double(r.n - 1));
  if (sd == 0.0) return r;
  const boost::math::students_t dist(double(r.n - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, (1.0 - confidence) / 2.0));
  r.ci_halfwidth = t * sd / std::sqrt(double(r.n));
  return r;
}

inline MosResult MosWithCi(const std::vector<NaturalnessResponse> &responses,
                           double confidence = 0.95) {
  std::vector<double> ratings;
  for (const auto &r : responses) {
    r.Validate();
    ratings.push_back(r.rating);
  }
  return MosWithCi(ratings, confidence);
}

/// `3.75 ± 0.34`
inline std::string FormatMos(double mean, double halfwidth, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, mean, decimals, halfwidth);
  return buf;
}

/// 1-based ranks; ties share their average rank.
inline std::vector<double> AverageRanks(const std::vector<double> &xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
};

/// Pearson correlation of average ranks, with the two-sided p-value from
/// t = rho sqrt((n - 2) / (1 - rho^2)) on n - 2 degrees of freedom.
inline SpearmanResult SpearmanRho(const std::vector<double> &xs, const std::vector<double> &ys) {
  if (xs.size() != ys.size()) Fail(ErrorKind::kInput, "spearman inputs differ in length");
  if (xs.size() < 3) Fail(ErrorKind::kInput, "spearman needs at least 3 pairs");
  const auto rx = AverageRanks(xs), ry = AverageRanks(ys);
  const double n = double(xs.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  SpearmanResult r;
  if (sxx == 0.0 || syy == 0.0) Fail(ErrorKind::kInput, "spearman input is constant");
  r.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(r.rho) >= 1.0) {
    r.p_value = 0.0;
    return r;
  }
  const double t = r.rho * std::sqrt((n - 2.0) / (1.0 - r.rho * r.rho));
  const boost::math::students_t dist(n - 2.0);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return r;
}

struct ScoreSummary {
  std::string facet;
  std::string level;
  std::size_t n = 0;
  std::optional<double> similarity;
  std::optional<double> mos;
  double ci_halfwidth = 0.0;
};

struct Facet {
  std::string name;
  std::vector<std::string> levels;
  // Level of a condition, or nullopt when the condition does not take part.
  std::function<std::optional<std::string>(const ConditionKey &)> level_of;
};

/// Facet families in display order: models, subsets, genders, source
/// technique, target technique.
inline std::vector<Facet> StudyFacets() {
  std::vector<std::string> models, techniques;
  for (auto m : kModelTags) models.emplace_back(ModelName(m));
  for (auto t : kTechniqueNames) techniques.emplace_back(t);
  auto technique_level = [](const std::optional<Technique> &t) -> std::optional<std::string> {
    if (!t) return std::nullopt;
    return std::string(TechniqueName(*t));
  };
  return {
      {"model", models, [](const ConditionKey &c) { return std::optional<std::string>(ModelName(c.model)); }},
      {"subset", {"train", "test"}, [](const ConditionKey &c) { return std::optional<std::string>(SplitName(c.subset)); }},
      {"gender", {"F", "M"}, [](const ConditionKey &c) { return std::optional<std::string>(GenderName(c.gender)); }},
      {"source_technique", techniques,
       [technique_level](const ConditionKey &c) { return technique_level(c.source_technique); }},
      {"target_technique", techniques,
       [technique_level](const ConditionKey &c) { return technique_level(c.target_technique); }},
  };
}

/// One summary per populated facet level. n counts every response in the
/// slice; similarity and MOS are present only when the slice has responses
/// of that kind.
inline std::vector<ScoreSummary> GroupAndSummarize(const ResponseSet &responses, double confidence = 0.95) {
  std::vector<ScoreSummary> out;
  for (const auto &facet : StudyFacets()) {
    for (const auto &level : facet.levels) {
      std::vector<SimilarityResponse> sim;
      std::vector<NaturalnessResponse> nat;
      for (const auto &r : responses.similarity)
        if (facet.level_of(r.conditions) == level) sim.push_back(r);
      for (const auto &r : responses.naturalness)
        if (facet.level_of(r.conditions) == level) nat.push_back(r);
      if (sim.empty() && nat.empty()) continue;
      ScoreSummary s{facet.name, level, sim.size() + nat.size(), std::nullopt, std::nullopt, 0.0};
      if (!sim.empty()) s.similarity = SimilarityScore(sim);
      if (!nat.empty()) {
        const auto mos = MosWithCi(nat, confidence);
        s.mos = mos.mean;
        s.ci_halfwidth = mos.ci_halfwidth;
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline std::string FormatOptional(const std::optional<double> &v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

/// `facet,level,n,similarity,mos,ci_halfwidth`; absent values are empty.
inline std::string SummaryCsv(const std::vector<ScoreSummary> &summaries) {
  std::ostringstream os;
  os << "facet,level,n,similarity,mos,ci_halfwidth\n";
  for (const auto &s : summaries) {
    char hw[32];
    std::snprintf(hw, sizeof hw, "%.6f", s.ci_halfwidth);
    os << s.facet << ',' << s.level << ',' << s.n << ',' << FormatOptional(s.similarity) << ','
       << FormatOptional(s.mos) << ',' << (s.mos ? hw : "") << '\n';
  }
  return os.str();
}

/// Bar-chart series in facet display order with the chance reference line.
inline std::string BarChartCsv(const std::vector<ScoreSummary> &summaries) {
  std::ostringstream os;
  os << "order,group,bar,similarity,mos,mos_ci_halfwidth,chance_level\n";
  int order = 0;
  char chance[32];
  std::snprintf(chance, sizeof chance, "%.6f", kChanceLevel);
  for (const auto &s : summaries) {
    char hw[32];
    std::snprintf(hw, sizeof hw, "%.6f", s.ci_halfwidth);
    os << order++ << ',' << s.facet << ',' << s.level << ',' << FormatOptional(s.similarity) << ','
       << FormatOptional(s.mos) << ',' << (s.mos ? hw : "") << ',' << chance << '\n';
  }
  return os.str();
}

struct AnalysisReport {
  std::vector<ScoreSummary> summaries;
  std::optional<MosResult> overall_converted_mos;
  std::optional<MosResult> unconverted_mos;
  std::optional<double> overall_similarity;
  std::optional<SpearmanResult> mos_similarity_correlation;
  std::size_t responses = 0;
};

/// Summaries plus headline numbers. The MOS / similarity correlation is taken
/// over converted model-facet and technique-facet levels that carry both.
inline AnalysisReport Analyze(const ResponseSet &responses, double confidence = 0.95) {
  AnalysisReport rep;
  rep.responses = responses.size();
  rep.summaries = GroupAndSummarize(responses, confidence);
  std::vector<NaturalnessResponse> conv, unconv;
  for (const auto &r : responses.naturalness)
    (r.conditions.model == ModelTag::kUnconverted ? unconv : conv).push_back(r);
  if (!conv.empty()) rep.overall_converted_mos = MosWithCi(conv, confidence);
  if (!unconv.empty()) rep.unconverted_mos = MosWithCi(unconv, confidence);
  if (!responses.similarity.empty()) rep.overall_similarity = SimilarityScore(responses.similarity);
  std::vector<double> xs, ys;
  for (const auto &s : rep.summaries)
    if (s.similarity && s.mos && s.level != "unconverted" && s.facet != "subset" && s.facet != "gender") {
      xs.push_back(*s.mos);
      ys.push_back(*s.similarity);
    }
  if (xs.size() >= 3) {
    try {
      rep.mos_similarity_correlation = SpearmanRho(xs, ys);
    } catch (const Error &) {
    }
  }
  return rep;
}

inline std::string RenderReport(const AnalysisReport &rep) {
  std::ostringstream os;
  char buf[128];
  os << "responses: " << rep.responses << "\n";
  if (rep.unconverted_mos)
    os << "MOS unconverted: " << FormatMos(rep.unconverted_mos->mean, rep.unconverted_mos->ci_halfwidth)
       << " (n=" << rep.unconverted_mos->n << ")\n";
  if (rep.overall_converted_mos)
    os << "MOS converted: "
       << FormatMos(rep.overall_converted_mos->mean, rep.overall_converted_mos->ci_halfwidth)
       << " (n=" << rep.overall_converted_mos->n << ")\n";
  if (rep.overall_similarity) {
    std::snprintf(buf, sizeof buf, "similarity S: %.4f (chance %.4f)\n", *rep.overall_similarity, kChanceLevel);
    os << buf;
  }
  for (const auto &s : rep.summaries) {
    os << "  " << s.facet << "=" << s.level << " n=" << s.n;
    if (s.similarity) {
      std::snprintf(buf, sizeof buf, " S=%.4f", *s.similarity);
      os << buf;
    }
    if (s.mos) os << " MOS=" << FormatMos(*s.mos, s.ci_halfwidth);
    os << "\n";
  }
  if (rep.mos_similarity_correlation) {
    std::snprintf(buf, sizeof buf, "spearman(MOS, S): rho=%.4f p=%.4f\n",
                  rep.mos_similarity_correlation->rho, rep.mos_similarity_correlation->p_value);
    os << buf;
  }
  return os.str();
}

inline void WriteAnalysis(const AnalysisReport &rep, const std::string &out_dir) {
  std::filesystem::create_directories(out_dir);
  auto write = [&](const std::string &leaf, const std::string &text) {
    const std::string path = (std::filesystem::path(out_dir) / leaf).string();
    std::ofstream os(path);
    if (!os) Fail(ErrorKind::kIo, "cannot write " + path);
    os << text;
  };
  write("summary.csv", SummaryCsv(rep.summaries));
  write("bars.csv", BarChartCsv(rep.summaries));
  write("report.txt", RenderReport(rep));
}

}  // namespace stc

#endif  // STC_EVAL_SCORES_HPP_
