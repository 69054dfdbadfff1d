#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "debate/core.hpp"

namespace debate::metrics {

/// Machine/human score vectors for one correlation group, aligned by item.
struct PairedSample {
  std::string group_id;
  std::vector<double> machine;
  std::vector<double> human;
};

enum class TauVariant { tau_a, tau_b };

/// Product-moment coefficient. nullopt when either vector is constant
/// (undefined_constant). Throws std::invalid_argument on shape violations.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Pearson over average (fractional) ranks.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Kendall rank correlation, tie-corrected (tau-b) by default.
/// Implemented with Knight's sort-and-merge counting, not pair enumeration.
std::optional<double> kendall_tau(const std::vector<double>& x, const std::vector<double>& y,
                                  TauVariant variant = TauVariant::tau_b);

/// Fractional (average) ranks, 1-based.
std::vector<double> average_ranks(const std::vector<double>& v);

using CoefficientFn =
    std::function<std::optional<double>(const std::vector<double>&, const std::vector<double>&)>;

struct GroupedResult {
  std::optional<double> mean;  // nullopt = all_groups_undefined
  int groups_used = 0;
  int groups_skipped = 0;
};

/// Per-group coefficient, then the unweighted mean over groups where it is
/// defined. Undefined (constant-vector) groups are skipped and counted,
/// never zero-filled. Groups are reduced in group_id order.
GroupedResult grouped_correlation(std::vector<PairedSample> samples, const CoefficientFn& coeff);

/// Percentage of scores at each scale point, rounded to two decimals.
/// Every scale point appears in the result, absent points as 0.
/// Throws DomainError("empty_input") on an empty score list.
std::map<int, double> score_distribution(const std::vector<ScoreValue>& scores,
                                         const AspectSpec& aspect);

/// Renders a percentage exactly as the distribution tables print it ("84.91").
std::string format_percent(double value);

}  // namespace debate::metrics
