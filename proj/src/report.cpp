#include "debate/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "debate/metrics.hpp"
#include "debate/serde.hpp"

namespace debate::harness {
namespace {

using nlohmann::json;

std::string fmt_coeff(const std::optional<double>& v) {
  if (!v) return "undef";
  std::ostringstream out;
  out << std::fixed << std::setprecision(4) << *v;
  return out.str();
}

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

int clamp_round(double v, int lo, int hi) {
  return std::max(lo, std::min(hi, static_cast<int>(std::llround(v))));
}

}  // namespace

RunReport build_report(const std::filesystem::path& run_dir, const ReportOptions& options) {
  const json manifest = read_run_manifest(run_dir);
  const auto records = read_ledger(run_dir);

  RunReport report;
  report.dataset_id = manifest.at("dataset_manifest").value("dataset_id", "unknown");
  report.config_hash = manifest.value("config_hash", "");
  report.convention = manifest.at("dataset_manifest")
                          .value("correlation_convention", std::vector<std::string>{});
  if (report.convention.empty()) report.convention = {"spearman", "kendall"};

  std::vector<AspectSpec> aspects =
      manifest.at("dataset_manifest").at("aspects").get<std::vector<AspectSpec>>();
  const std::vector<std::string> run_aspects =
      manifest.value("aspects", std::vector<std::string>{});
  if (!run_aspects.empty()) {
    std::vector<AspectSpec> filtered;
    for (const auto& name : run_aspects) {
      for (const auto& a : aspects) {
        if (a.name == name) filtered.push_back(a);
      }
    }
    aspects = std::move(filtered);
  }

  std::vector<double> avg_r, avg_rho, avg_tau;
  bool any_usable_group = false;

  for (const auto& aspect : aspects) {
    AspectReport ar;
    ar.aspect = aspect.name;
    report.scale_min = aspect.scale_min;
    report.scale_max = aspect.scale_max;

    // group_id -> (machine, human), failed debates excluded and counted.
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> groups;
    std::vector<ScoreValue> machine_scores;
    std::vector<ScoreValue> human_scores;
    for (const auto& record : records) {
      if (record.aspect != aspect.name) continue;
      ++ar.items;
      if (record.termination == Termination::failed || !record.machine_score) {
        ++ar.failures;
        continue;
      }
      auto& [machine, human] = groups[record.group_id];
      machine.push_back(static_cast<double>(*record.machine_score));
      human.push_back(record.human_score);
      machine_scores.push_back(ScoreValue{*record.machine_score, aspect.name});
      human_scores.push_back(
          ScoreValue{clamp_round(record.human_score, aspect.scale_min, aspect.scale_max),
                     aspect.name});
    }
    if (ar.items == 0) continue;

    std::vector<metrics::PairedSample> samples;
    int underfilled = 0;
    for (auto& [group_id, vectors] : groups) {
      if (vectors.first.size() < 2) {
        ++underfilled;  // failures can leave a group too small to correlate
        continue;
      }
      samples.push_back(metrics::PairedSample{group_id, std::move(vectors.first),
                                              std::move(vectors.second)});
    }

    if (!samples.empty()) {
      const auto r = metrics::grouped_correlation(
          samples, [](const auto& x, const auto& y) { return metrics::pearson(x, y); });
      const auto rho = metrics::grouped_correlation(
          samples, [](const auto& x, const auto& y) { return metrics::spearman(x, y); });
      const auto tau = metrics::grouped_correlation(
          samples, [&options](const auto& x, const auto& y) {
            return metrics::kendall_tau(x, y, options.tau_variant);
          });
      ar.pearson = r.mean;
      ar.spearman = rho.mean;
      ar.kendall = tau.mean;
      ar.groups_used = rho.groups_used;
      ar.groups_skipped = rho.groups_skipped + underfilled;
      if (rho.groups_used > 0) any_usable_group = true;
    } else {
      ar.groups_skipped = underfilled;
    }

    if (!machine_scores.empty()) {
      ar.machine_distribution = metrics::score_distribution(machine_scores, aspect);
      ar.human_distribution = metrics::score_distribution(human_scores, aspect);
    }

    if (ar.pearson) avg_r.push_back(*ar.pearson);
    if (ar.spearman) avg_rho.push_back(*ar.spearman);
    if (ar.kendall) avg_tau.push_back(*ar.kendall);
    report.total_failures += ar.failures;
    report.aspects.push_back(std::move(ar));
  }

  if (report.aspects.empty() || !any_usable_group) {
    throw DomainError("insufficient_data",
                      "no aspect in " + run_dir.string() + " has a usable correlation group");
  }

  report.avg_pearson = mean_of(avg_r);
  report.avg_spearman = mean_of(avg_rho);
  report.avg_kendall = mean_of(avg_tau);
  return report;
}

std::string render_report_text(const RunReport& report) {
  std::ostringstream out;
  out << "Dataset: " << report.dataset_id << " (config " << report.config_hash << ")\n";
  out << "Grouped correlation: per-group coefficients averaged over groups\n\n";

  const auto coeff_of = [](const AspectReport& ar,
                           const std::string& name) -> std::optional<double> {
    if (name == "pearson") return ar.pearson;
    if (name == "spearman") return ar.spearman;
    return ar.kendall;
  };
  const auto avg_of = [&](const std::string& name) -> std::optional<double> {
    if (name == "pearson") return report.avg_pearson;
    if (name == "spearman") return report.avg_spearman;
    return report.avg_kendall;
  };

  out << std::left << std::setw(14) << "aspect";
  for (const auto& name : report.convention) out << std::right << std::setw(10) << name;
  out << std::right << std::setw(9) << "groups" << std::setw(9) << "skipped" << std::setw(10)
      << "failures" << "\n";
  for (const auto& ar : report.aspects) {
    out << std::left << std::setw(14) << ar.aspect;
    for (const auto& name : report.convention) {
      out << std::right << std::setw(10) << fmt_coeff(coeff_of(ar, name));
    }
    out << std::right << std::setw(9) << ar.groups_used << std::setw(9) << ar.groups_skipped
        << std::setw(10) << ar.failures << "\n";
  }
  out << std::left << std::setw(14) << "average";
  for (const auto& name : report.convention) {
    out << std::right << std::setw(10) << fmt_coeff(avg_of(name));
  }
  out << "\n\n";

  out << "Score distribution (%)\n";
  for (const auto& ar : report.aspects) {
    if (ar.machine_distribution.empty()) continue;
    out << "\n" << ar.aspect << "\n";
    out << std::left << std::setw(8) << "score" << std::right << std::setw(10) << "machine"
        << std::setw(10) << "human" << "\n";
    for (const auto& [score, machine_pct] : ar.machine_distribution) {
      out << std::left << std::setw(8) << score << std::right << std::setw(10)
          << metrics::format_percent(machine_pct) << std::setw(10)
          << metrics::format_percent(ar.human_distribution.at(score)) << "\n";
    }
  }
  return out.str();
}

json report_json(const RunReport& report) {
  json j;
  j["dataset_id"] = report.dataset_id;
  j["config_hash"] = report.config_hash;
  j["convention"] = report.convention;
  j["total_failures"] = report.total_failures;
  json aspects = json::array();
  for (const auto& ar : report.aspects) {
    json a{{"aspect", ar.aspect},
           {"groups_used", ar.groups_used},
           {"groups_skipped", ar.groups_skipped},
           {"failures", ar.failures},
           {"items", ar.items}};
    a["pearson"] = ar.pearson ? json(*ar.pearson) : json(nullptr);
    a["spearman"] = ar.spearman ? json(*ar.spearman) : json(nullptr);
    a["kendall"] = ar.kendall ? json(*ar.kendall) : json(nullptr);
    json machine = json::object();
    json human = json::object();
    for (const auto& [score, pct] : ar.machine_distribution) {
      machine[std::to_string(score)] = pct;
      human[std::to_string(score)] = ar.human_distribution.at(score);
    }
    a["machine_distribution"] = std::move(machine);
    a["human_distribution"] = std::move(human);
    aspects.push_back(std::move(a));
  }
  j["aspects"] = std::move(aspects);
  j["average"] = {{"pearson", report.avg_pearson ? json(*report.avg_pearson) : json(nullptr)},
                  {"spearman", report.avg_spearman ? json(*report.avg_spearman) : json(nullptr)},
                  {"kendall", report.avg_kendall ? json(*report.avg_kendall) : json(nullptr)}};
  return j;
}

RunReport cmd_report(const std::filesystem::path& run_dir, const ReportOptions& options) {
  RunReport report = build_report(run_dir, options);
  {
    std::ofstream out(run_dir / "report.txt");
    out << render_report_text(report);
  }
  {
    std::ofstream out(run_dir / "report.json");
    out << report_json(report).dump(2) << "\n";
  }
  return report;
}

}  // namespace debate::harness
