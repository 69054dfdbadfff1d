#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "debate/harness.hpp"
#include "debate/metrics.hpp"

namespace debate::harness {

struct AspectReport {
  std::string aspect;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> kendall;
  int groups_used = 0;
  int groups_skipped = 0;  // constant-vector or under-filled groups
  int failures = 0;
  int items = 0;
  std::map<int, double> machine_distribution;
  std::map<int, double> human_distribution;
};

struct RunReport {
  std::string dataset_id;
  std::string config_hash;
  std::vector<std::string> convention;  // the Table-style coefficient pair
  std::vector<AspectReport> aspects;
  std::optional<double> avg_pearson;
  std::optional<double> avg_spearman;
  std::optional<double> avg_kendall;
  int total_failures = 0;
  int scale_min = 1;
  int scale_max = 5;
};

struct ReportOptions {
  // Tau-b suits the heavily tied integer scales; tau-a is kept for
  // sensitivity analysis.
  metrics::TauVariant tau_variant = metrics::TauVariant::tau_b;
};

/// Pure function of the run's manifest + ledger: per-aspect correlations
/// with grouped aggregation, skip/failure counts and score distributions.
/// DomainError("insufficient_data") when no aspect has a usable group.
RunReport build_report(const std::filesystem::path& run_dir, const ReportOptions& options = {});

std::string render_report_text(const RunReport& report);
nlohmann::json report_json(const RunReport& report);

/// Builds the report and writes report.txt / report.json into the run dir.
RunReport cmd_report(const std::filesystem::path& run_dir, const ReportOptions& options = {});

}  // namespace debate::harness
