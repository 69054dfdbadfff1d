#include "debate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

namespace debate::metrics {
namespace {

bool is_constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double d) { return d == v.front(); });
}

void check_pair(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("correlation inputs differ in length");
  if (x.size() < 2) throw std::invalid_argument("correlation needs at least 2 observations");
}

// Counts strict inversions in v (pairs i<j with v[i] > v[j]) by merge sort.
long long count_inversions(std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<double> tmp(n);
  long long inversions = 0;
  for (size_t width = 1; width < n; width *= 2) {
    for (size_t lo = 0; lo + width < n; lo += 2 * width) {
      const size_t mid = lo + width;
      const size_t hi = std::min(lo + 2 * width, n);
      size_t l = lo, r = mid, out = lo;
      while (l < mid && r < hi) {
        if (v[r] < v[l]) {
          inversions += static_cast<long long>(mid - l);
          tmp[out++] = v[r++];
        } else {
          tmp[out++] = v[l++];
        }
      }
      while (l < mid) tmp[out++] = v[l++];
      while (r < hi) tmp[out++] = v[r++];
      std::copy(tmp.begin() + static_cast<ptrdiff_t>(lo), tmp.begin() + static_cast<ptrdiff_t>(hi),
                v.begin() + static_cast<ptrdiff_t>(lo));
    }
  }
  return inversions;
}

// Sum of t*(t-1)/2 over runs of equal values in a sorted vector.
long long tied_pairs(const std::vector<double>& sorted) {
  long long total = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const long long t = static_cast<long long>(j - i);
    total += t * (t - 1) / 2;
    i = j;
  }
  return total;
}

}  // namespace

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  const size_t n = v.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i + 1;
    while (j < n && v[order[j]] == v[order[i]]) ++j;
    // Positions i..j-1 share the average of ranks i+1..j (1-based).
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) return std::nullopt;
  return pearson(average_ranks(x), average_ranks(y));
}

std::optional<double> kendall_tau(const std::vector<double>& x, const std::vector<double>& y,
                                  TauVariant variant) {
  check_pair(x, y);
  if (is_constant(x) || is_constant(y)) return std::nullopt;

  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (x[a] != x[b]) return x[a] < x[b];
    return y[a] < y[b];
  });

  // Tie bookkeeping over the (x, y)-sorted sequence.
  long long ties_x = 0, ties_xy = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    const long long t = static_cast<long long>(j - i);
    ties_x += t * (t - 1) / 2;
    size_t k = i;
    while (k < j) {
      size_t m = k + 1;
      while (m < j && y[order[m]] == y[order[k]]) ++m;
      const long long u = static_cast<long long>(m - k);
      ties_xy += u * (u - 1) / 2;
      k = m;
    }
    i = j;
  }

  std::vector<double> y_sorted_by_x(n);
  for (size_t k = 0; k < n; ++k) y_sorted_by_x[k] = y[order[k]];
  const long long discordant = count_inversions(y_sorted_by_x);

  std::vector<double> y_sorted(y);
  std::sort(y_sorted.begin(), y_sorted.end());
  const long long ties_y = tied_pairs(y_sorted);

  const long long n0 = static_cast<long long>(n) * (static_cast<long long>(n) - 1) / 2;
  const long long numerator = n0 - ties_x - ties_y + ties_xy - 2 * discordant;

  if (variant == TauVariant::tau_a) {
    return static_cast<double>(numerator) / static_cast<double>(n0);
  }
  const double denom = std::sqrt(static_cast<double>(n0 - ties_x)) *
                       std::sqrt(static_cast<double>(n0 - ties_y));
  if (denom == 0.0) return std::nullopt;
  return static_cast<double>(numerator) / denom;
}

GroupedResult grouped_correlation(std::vector<PairedSample> samples, const CoefficientFn& coeff) {
  std::sort(samples.begin(), samples.end(),
            [](const PairedSample& a, const PairedSample& b) { return a.group_id < b.group_id; });
  GroupedResult result;
  double sum = 0.0;
  for (const auto& sample : samples) {
    if (sample.machine.size() != sample.human.size() || sample.machine.size() < 2) {
      throw std::invalid_argument("group '" + sample.group_id +
                                  "' violates the paired-sample shape");
    }
    const auto value = coeff(sample.machine, sample.human);
    if (value) {
      sum += *value;
      ++result.groups_used;
    } else {
      ++result.groups_skipped;
    }
  }
  if (result.groups_used > 0) result.mean = sum / result.groups_used;
  return result;
}

std::map<int, double> score_distribution(const std::vector<ScoreValue>& scores,
                                         const AspectSpec& aspect) {
  if (scores.empty()) throw DomainError("empty_input", "score_distribution over an empty list");
  std::map<int, long long> counts;
  for (int s = aspect.scale_min; s <= aspect.scale_max; ++s) counts[s] = 0;
  for (const auto& score : scores) {
    if (score.value < aspect.scale_min || score.value > aspect.scale_max) {
      throw DomainError("out_of_range", "score " + std::to_string(score.value) +
                                            " outside the scale of aspect '" + aspect.name + "'");
    }
    ++counts[score.value];
  }
  std::map<int, double> percent;
  const double total = static_cast<double>(scores.size());
  for (const auto& [point, count] : counts) {
    // Basis points keep the two-decimal rounding exact and printable.
    const long long bp = std::llround(static_cast<double>(count) * 10000.0 / total);
    percent[point] = static_cast<double>(bp) / 100.0;
  }
  return percent;
}

std::string format_percent(double value) {
  const long long bp = std::llround(value * 100.0);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%lld.%02lld", bp / 100, std::llabs(bp % 100));
  return buf;
}

}  // namespace debate::metrics
