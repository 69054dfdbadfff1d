#pragma once

// Test-only oracles and fixtures. Everything here is deliberately written
// on a different route than the library code it checks: raw-moment Pearson,
// counting-based ranks, exhaustive pair enumeration for tau.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "debate/core.hpp"

namespace oracle {

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += static_cast<long double>(x[i]) * x[i];
    syy += static_cast<long double>(y[i]) * y[i];
    sxy += static_cast<long double>(x[i]) * y[i];
  }
  const long double vx = n * sxx - sx * sx;
  const long double vy = n * syy - sy * sy;
  if (vx <= 0 || vy <= 0) return std::nullopt;
  return static_cast<double>((n * sxy - sx * sy) / std::sqrt(vx * vy));
}

// Fractional rank by counting smaller and equal elements.
inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    size_t smaller = 0, equal = 0;
    for (size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++smaller;
      if (v[j] == v[i]) ++equal;
    }
    out[i] = static_cast<double>(smaller) + 1.0 + (static_cast<double>(equal) - 1.0) / 2.0;
  }
  return out;
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

// Exhaustive O(n^2) pair enumeration, tau-b.
inline std::optional<double> kendall(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  long long concordant = 0, discordant = 0, tie_x = 0, tie_y = 0, tie_both = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0 && dy == 0) ++tie_both;
      else if (dx == 0) ++tie_x;
      else if (dy == 0) ++tie_y;
      else if (dx * dy > 0) ++concordant;
      else ++discordant;
    }
  }
  const long long pairs = static_cast<long long>(n) * (n - 1) / 2;
  const long double denom_x = pairs - (tie_x + tie_both);
  const long double denom_y = pairs - (tie_y + tie_both);
  if (denom_x <= 0 || denom_y <= 0) return std::nullopt;
  return static_cast<double>((concordant - discordant) / std::sqrt(denom_x * denom_y));
}

inline std::vector<double> random_int_vector(std::mt19937_64& rng, size_t length, int lo, int hi) {
  std::vector<double> v(length);
  for (auto& e : v) {
    e = static_cast<double>(lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)));
  }
  return v;
}

}  // namespace oracle

namespace fixtures {

inline debate::AspectSpec coherence_aspect() {
  debate::AspectSpec aspect;
  aspect.name = "coherence";
  aspect.criteria_text =
      "the collective quality of all sentences. We align this dimension with the DUC quality "
      "question of structure and coherence whereby \"the summary should be well-structured and "
      "well-organized. The summary should not just be a heap of related information, but should "
      "build from sentence to a coherent body of information about a topic.\"";
  aspect.steps_text =
      "1. Read the news article carefully and identify the main topic and key points.\n"
      "2. Read the summary and compare it to the news article. Check if the summary covers the "
      "main topic and key points of the news article, and if it presents them in a clear and "
      "logical order.\n"
      "3. Assign a score for coherence on a scale of 1 to 5, where 1 is the lowest and 5 is the "
      "highest based on the Evaluation Criteria.";
  aspect.scale_min = 1;
  aspect.scale_max = 5;
  return aspect;
}

inline debate::TaskSpec summarization_task() {
  debate::TaskSpec task;
  task.task_kind = debate::TaskKind::summarization;
  task.instruction_text =
      "You will be given one summary written for a news article. Your task is to rate the "
      "summary on one metric. Please make sure you read and understand these instructions "
      "carefully. Please keep this document open while reviewing, and refer to it as needed.";
  task.context_labels = {"Source Text", "Summary"};
  return task;
}

inline debate::EvaluationItem sample_item() {
  debate::EvaluationItem item;
  item.item_id = "doc-001-sys-01";
  item.group_id = "doc-001";
  item.system_id = "sys-01";
  item.context_blocks = {
      {"Source Text", "The council voted on Tuesday to expand the city park by two hectares."},
      {"Summary", "The council voted to expand the park."}};
  item.human_scores = {{"coherence", 4.33}, {"consistency", 5.0}, {"fluency", 4.67},
                       {"relevance", 4.0}};
  return item;
}

inline std::string repo_root() {
#ifdef DEBATE_REPO_ROOT
  return DEBATE_REPO_ROOT;
#else
  return ".";
#endif
}

}  // namespace fixtures
