// Command-line surface: run experiments over a dataset, build correlation
// and distribution reports, inspect stored debates, sweep ablation grids,
// convert upstream benchmark files and generate synthetic fixtures.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "debate/datasets.hpp"
#include "debate/harness.hpp"
#include "debate/metrics.hpp"
#include "debate/report.hpp"
#include "debate/serde.hpp"

namespace {

using namespace debate;

constexpr int kExitOk = 0;
constexpr int kExitPartialFailures = 1;
constexpr int kExitFatal = 2;

struct RunFlags {
  std::string dataset;
  std::string manifest;
  std::vector<std::string> aspects;
  std::string out;
  int n = 4;
  std::string persona;
  std::string style = "devils_advocate";
  std::string prompt_variant = "original";
  std::string commander = "router";
  std::string backend = "scripted";
  std::string model = "gpt-4";
  double temperature = 0.0;
  int workers = 1;
  std::string cache_dir;
  bool resume = false;
  std::uint64_t seed = 0;
  int groups = 0;
  long max_calls = 1000;
  long limit = 0;
  std::string prompt_dir;
  std::string scripted_scorer = "constant";
  std::string scripted_critic = "concede:2";
  std::string scripted_tiebreak;
  std::string concession = "literal";
  std::string template_id = "debate";
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--dataset", flags.dataset, "canonical JSONL dataset")->required();
  cmd->add_option("--manifest", flags.manifest, "dataset manifest JSON")->required();
  cmd->add_option("--aspects", flags.aspects, "aspects to score (default: all)")->delimiter(',');
  cmd->add_option("--out", flags.out, "run output directory")->required();
  cmd->add_option("--n", flags.n, "max debate iterations");
  cmd->add_option("--persona", flags.persona,
                  "critic persona (default: strict for devils_advocate/both, plain otherwise)");
  cmd->add_option("--style", flags.style, "plain|devils_advocate|tie_breaker|both");
  cmd->add_option("--prompt-variant", flags.prompt_variant, "original|sophisticated");
  cmd->add_option("--commander", flags.commander, "router|llm");
  cmd->add_option("--backend", flags.backend, "scripted|http");
  cmd->add_option("--model", flags.model, "model name for http runs");
  cmd->add_option("--temperature", flags.temperature, "sampling temperature");
  cmd->add_option("--workers", flags.workers, "concurrent debates");
  cmd->add_option("--cache-dir", flags.cache_dir, "response cache directory (http)");
  cmd->add_flag("--resume", flags.resume, "skip (item, aspect) pairs already in the ledger");
  cmd->add_option("--seed", flags.seed, "subsampling seed");
  cmd->add_option("--groups", flags.groups, "subsample to N whole groups");
  cmd->add_option("--max-calls", flags.max_calls, "http call budget for the pre-flight check");
  cmd->add_option("--limit", flags.limit, "stop after N new debates");
  cmd->add_option("--prompts", flags.prompt_dir, "prompt pack directory");
  cmd->add_option("--scripted-scorer", flags.scripted_scorer,
                  "constant|increment|decrement[:s0] or itemhash");
  cmd->add_option("--scripted-critic", flags.scripted_critic, "concede[:k]|always");
  cmd->add_option("--scripted-tiebreak", flags.scripted_tiebreak, "fixed tiebreak score");
  cmd->add_option("--concession", flags.concession,
                  "literal (published substring rule) | standalone (whole-line only)");
  cmd->add_option("--template", flags.template_id, "scoring template: debate|scores_only");
}

harness::RunSpec to_spec(const RunFlags& flags) {
  harness::RunSpec spec;
  spec.dataset_path = flags.dataset;
  spec.manifest_path = flags.manifest;
  spec.aspects = flags.aspects;
  spec.out_dir = flags.out;

  spec.config = make_config(parse_debate_style(flags.style), flags.n);
  if (!flags.persona.empty()) {
    spec.config.persona = parse_persona_level(flags.persona);
    spec.config.persona_override = true;
  }
  spec.config.prompt_variant = parse_prompt_variant(flags.prompt_variant);
  spec.config.commander_mode = parse_commander_mode(flags.commander);
  spec.config.model_params.model_name = flags.model;
  spec.config.model_params.temperature = flags.temperature;
  spec.config.backend_id = flags.backend;

  spec.workers = flags.workers;
  spec.resume = flags.resume;
  spec.seed = flags.seed;
  spec.n_groups = flags.groups;
  spec.backend_kind = flags.backend;
  spec.scripted = harness::ScriptedSpec::parse(flags.scripted_scorer, flags.scripted_critic,
                                               flags.scripted_tiebreak);
  if (!flags.cache_dir.empty()) spec.cache_dir = flags.cache_dir;
  spec.max_calls = flags.max_calls;
  spec.limit = flags.limit;
  if (!flags.prompt_dir.empty()) spec.prompt_dir = flags.prompt_dir;
  if (flags.concession == "standalone") {
    spec.concession_mode = parsing::ConcessionMode::standalone;
  } else if (flags.concession != "literal") {
    throw harness::HarnessError("invalid_params",
                                "unknown concession mode '" + flags.concession + "'");
  }
  spec.template_id = flags.template_id;
  return spec;
}

int do_run(const RunFlags& flags) {
  auto spec = to_spec(flags);
  spec.progress = [](const std::string& line) { std::cout << line << "\n"; };
  const auto summary = harness::cmd_run(spec);
  std::cout << "executed " << summary.executed << " debates, resumed past " << summary.resumed
            << ", failures " << summary.failures << "\n";
  std::cout << "outputs under " << summary.out_dir.string() << "\n";
  return summary.failures > 0 ? kExitPartialFailures : kExitOk;
}

int do_report(const std::string& run_dir, const std::string& tau) {
  harness::ReportOptions options;
  if (tau == "a") {
    options.tau_variant = metrics::TauVariant::tau_a;
  } else if (tau != "b") {
    std::cerr << "unknown tau variant '" << tau << "'\n";
    return kExitFatal;
  }
  const auto report = harness::cmd_report(run_dir, options);
  std::cout << harness::render_report_text(report);
  return report.total_failures > 0 ? kExitPartialFailures : kExitOk;
}

int do_ablate(const RunFlags& flags, const std::vector<int>& ns,
              const std::vector<std::string>& personas, const std::vector<std::string>& styles) {
  harness::AblateGrid grid;
  grid.iterations = ns.empty() ? std::vector<int>{flags.n} : ns;
  if (personas.empty()) {
    grid.personas = {PersonaLevel::strictly_negative};
  } else {
    grid.persona_gridded = true;
    for (const auto& p : personas) grid.personas.push_back(parse_persona_level(p));
  }
  if (styles.empty()) {
    grid.styles = {parse_debate_style(flags.style)};
  } else {
    for (const auto& s : styles) grid.styles.push_back(parse_debate_style(s));
  }

  const auto cells = harness::cmd_ablate(to_spec(flags), grid);
  int failures = 0;
  for (const auto& cell : cells) {
    if (!cell.error.empty()) {
      ++failures;
      std::cout << cell.name << ": ERROR " << cell.error << "\n";
      continue;
    }
    try {
      const auto report = harness::cmd_report(cell.out_dir);
      std::cout << cell.name << ": ok";
      for (const auto& name : report.convention) {
        const auto v = name == "pearson"   ? report.avg_pearson
                       : name == "spearman" ? report.avg_spearman
                                            : report.avg_kendall;
        std::cout << "  avg " << name << " " << (v ? std::to_string(*v) : "undef");
      }
      std::cout << "\n";
    } catch (const std::exception& ex) {
      std::cout << cell.name << ": ran, but no report (" << ex.what() << ")\n";
    }
  }
  std::cout << "combined cell table: " << (to_spec(flags).out_dir / "cells.json").string() << "\n";
  return failures > 0 ? kExitPartialFailures : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent debate scoring engine and meta-evaluation harness"};
  app.require_subcommand(1);

  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "score a dataset with debates");
  add_run_flags(run_cmd, run_flags);

  std::string report_dir;
  std::string report_tau = "b";
  auto* report_cmd = app.add_subcommand("report", "correlation and distribution tables");
  report_cmd->add_option("--run", report_dir, "run directory")->required();
  report_cmd->add_option("--tau", report_tau, "kendall variant: b (tie-corrected, default) | a");

  std::string inspect_dir, inspect_id, inspect_item, inspect_aspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "render one stored debate");
  inspect_cmd->add_option("--run", inspect_dir, "run directory")->required();
  inspect_cmd->add_option("--id", inspect_id, "transcript id");
  inspect_cmd->add_option("--item", inspect_item, "item id (with --aspect)");
  inspect_cmd->add_option("--aspect", inspect_aspect, "aspect name (with --item)");

  RunFlags ablate_flags;
  std::vector<int> grid_n;
  std::vector<std::string> grid_personas, grid_styles;
  auto* ablate_cmd = app.add_subcommand("ablate", "sweep a config grid");
  add_run_flags(ablate_cmd, ablate_flags);
  ablate_cmd->add_option("--grid-n", grid_n, "iteration counts")->delimiter(',');
  ablate_cmd->add_option("--grid-persona", grid_personas, "personas")->delimiter(',');
  ablate_cmd->add_option("--grid-style", grid_styles, "styles")->delimiter(',');

  std::string conv_source, conv_input, conv_output, conv_pooling = "mean";
  auto* convert_cmd = app.add_subcommand("convert-dataset", "upstream file -> canonical JSONL");
  convert_cmd->add_option("--source", conv_source, "summeval|topical_chat")->required();
  convert_cmd->add_option("--input", conv_input, "upstream file")->required();
  convert_cmd->add_option("--output", conv_output, "canonical JSONL path")->required();
  convert_cmd->add_option("--pooling", conv_pooling, "annotator pooling: mean|median");

  std::string synth_manifest, synth_output;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "deterministic synthetic dataset");
  synth_cmd->add_option("--manifest", synth_manifest, "dataset manifest JSON")->required();
  synth_cmd->add_option("--output", synth_output, "output JSONL path")->required();
  synth_cmd->add_option("--seed", synth_seed, "generator seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return do_run(run_flags);
    if (*report_cmd) return do_report(report_dir, report_tau);
    if (*inspect_cmd) {
      if (!inspect_id.empty()) {
        std::cout << harness::cmd_inspect(inspect_dir, inspect_id);
      } else if (!inspect_item.empty() && !inspect_aspect.empty()) {
        std::cout << harness::cmd_inspect(inspect_dir, inspect_item, inspect_aspect);
      } else {
        std::cerr << "inspect needs --id or both --item and --aspect\n";
        return kExitFatal;
      }
      return kExitOk;
    }
    if (*ablate_cmd) return do_ablate(ablate_flags, grid_n, grid_personas, grid_styles);
    if (*convert_cmd) {
      const auto pooling = data::parse_pooling(conv_pooling);
      data::ConvertStats stats;
      if (conv_source == "summeval") {
        stats = data::convert_summeval(conv_input, conv_output, pooling);
      } else if (conv_source == "topical_chat") {
        stats = data::convert_topical_chat(conv_input, conv_output, pooling);
      } else {
        std::cerr << "unknown source '" << conv_source << "'\n";
        return kExitFatal;
      }
      std::cout << "converted " << stats.items << " items in " << stats.groups
                << " groups (input sha256 " << stats.input_sha256 << ")\n";
      return kExitOk;
    }
    if (*synth_cmd) {
      const auto manifest = data::DatasetManifest::load(synth_manifest);
      const auto items = data::make_synthetic(manifest, synth_seed);
      data::write_jsonl(synth_output, items);
      std::cout << "wrote " << items.size() << " synthetic items to " << synth_output << "\n";
      return kExitOk;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitFatal;
  }
  return kExitOk;
}
