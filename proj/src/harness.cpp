#include "debate/harness.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "debate/backend.hpp"
#include "debate/cache_backend.hpp"
#include "debate/hashing.hpp"
#include "debate/http_backend.hpp"
#include "debate/serde.hpp"

namespace debate::harness {
namespace {

using nlohmann::json;

// Derives a stable in-scale value from (item, aspect) for "auto" scripted
// params, so scripted machine scores vary across a dataset.
int hashed_scale_value(const std::string& item_id, const std::string& aspect, int scale_min,
                       int scale_max) {
  const std::string digest = sha256_hex(item_id + "\x1f" + aspect);
  const unsigned long v = std::stoul(digest.substr(0, 8), nullptr, 16);
  const int span = scale_max - scale_min + 1;
  return scale_min + static_cast<int>(v % static_cast<unsigned long>(span));
}

int parse_policy_arg(const std::string& text, const std::string& what) {
  try {
    return std::stoi(text);
  } catch (const std::exception&) {
    throw HarnessError("invalid_params", "cannot parse " + what + " from '" + text + "'");
  }
}

}  // namespace

ScriptedSpec ScriptedSpec::parse(const std::string& scorer, const std::string& critic,
                                 const std::string& tiebreak) {
  ScriptedSpec spec;
  const auto split = [](const std::string& s) -> std::pair<std::string, std::string> {
    const auto colon = s.find(':');
    if (colon == std::string::npos) return {s, ""};
    return {s.substr(0, colon), s.substr(colon + 1)};
  };

  const auto [scorer_kind, scorer_arg] = split(scorer);
  if (scorer_kind == "constant" || scorer_kind == "itemhash") {
    spec.scorer_kind = scripted::PolicyKind::constant_scorer;
  } else if (scorer_kind == "increment") {
    spec.scorer_kind = scripted::PolicyKind::increment_scorer;
  } else if (scorer_kind == "decrement") {
    spec.scorer_kind = scripted::PolicyKind::decrement_scorer;
  } else {
    throw HarnessError("invalid_params", "unknown scripted scorer '" + scorer + "'");
  }
  spec.scorer_start = scorer_arg.empty() ? 0 : parse_policy_arg(scorer_arg, "scorer start");

  const auto [critic_kind, critic_arg] = split(critic);
  if (critic_kind == "concede") {
    spec.concede_k = critic_arg.empty() ? 2 : parse_policy_arg(critic_arg, "concession turn");
    if (spec.concede_k < 1) throw HarnessError("invalid_params", "concession turn must be >= 1");
  } else if (critic_kind == "always") {
    spec.concede_k = 0;
  } else {
    throw HarnessError("invalid_params", "unknown scripted critic '" + critic + "'");
  }

  spec.tiebreak_score = tiebreak.empty() ? 0 : parse_policy_arg(tiebreak, "tiebreak score");
  return spec;
}

void to_json(json& j, const LedgerRecord& r) {
  j = json{{"item_id", r.item_id},
           {"aspect", r.aspect},
           {"config_hash", r.config_hash},
           {"group_id", r.group_id},
           {"system_id", r.system_id},
           {"human_score", r.human_score},
           {"termination", r.termination},
           {"iterations_used", r.iterations_used},
           {"transcript_id", r.transcript_id}};
  if (r.machine_score) j["machine_score"] = *r.machine_score;
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.concession_excerpt.empty()) j["concession_excerpt"] = r.concession_excerpt;
}

void from_json(const json& j, LedgerRecord& r) {
  j.at("item_id").get_to(r.item_id);
  j.at("aspect").get_to(r.aspect);
  j.at("config_hash").get_to(r.config_hash);
  j.at("group_id").get_to(r.group_id);
  j.at("system_id").get_to(r.system_id);
  j.at("human_score").get_to(r.human_score);
  j.at("termination").get_to(r.termination);
  j.at("iterations_used").get_to(r.iterations_used);
  j.at("transcript_id").get_to(r.transcript_id);
  if (j.contains("machine_score")) r.machine_score = j.at("machine_score").get<int>();
  r.error = j.value("error", "");
  r.concession_excerpt = j.value("concession_excerpt", "");
}

std::vector<LedgerRecord> read_ledger(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "ledger.jsonl");
  if (!in) throw HarnessError("not_found", "no ledger under " + run_dir.string());
  std::vector<LedgerRecord> records;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    LedgerRecord record;
    try {
      record = json::parse(line).get<LedgerRecord>();
    } catch (const std::exception& ex) {
      throw HarnessError("schema_error", run_dir.string() + "/ledger.jsonl:" +
                                             std::to_string(line_no) + ": " + ex.what());
    }
    // First record per key wins: outcomes are never double-counted.
    if (seen.insert(record.key()).second) records.push_back(std::move(record));
  }
  return records;
}

json read_run_manifest(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  if (!in) throw HarnessError("not_found", "no manifest under " + run_dir.string());
  return json::parse(in);
}

namespace {

struct DebateTask {
  const EvaluationItem* item = nullptr;
  const AspectSpec* aspect = nullptr;
};

engine::BackendSet scripted_backends(const ScriptedSpec& spec, const EvaluationItem& item,
                                     const AspectSpec& aspect) {
  scripted::PolicyParams params;
  params.scale_min = aspect.scale_min;
  params.scale_max = aspect.scale_max;
  if (!spec.criticism_text.empty()) params.criticism_text = spec.criticism_text;

  params.start_score = spec.scorer_start != 0
                           ? spec.scorer_start
                           : hashed_scale_value(item.item_id, aspect.name, aspect.scale_min,
                                                aspect.scale_max);
  auto scorer = std::make_shared<backend::ScriptedBackend>(
      scripted::make_policy(spec.scorer_kind, params));

  backend::BackendPtr critic;
  if (spec.concede_k >= 1) {
    params.k = spec.concede_k;
    critic = std::make_shared<backend::ScriptedBackend>(
        scripted::make_policy(scripted::PolicyKind::concede_at_k, params));
  } else {
    critic = std::make_shared<backend::ScriptedBackend>(
        scripted::make_policy(scripted::PolicyKind::always_criticize, params));
  }

  params.tiebreak_score = spec.tiebreak_score != 0
                              ? spec.tiebreak_score
                              : hashed_scale_value(item.item_id, aspect.name + "#tiebreak",
                                                   aspect.scale_min, aspect.scale_max);
  auto tiebreaker = std::make_shared<backend::ScriptedBackend>(
      scripted::make_policy(scripted::PolicyKind::scripted_tiebreaker, params));

  return engine::BackendSet{scorer, critic, tiebreaker, scorer};
}

}  // namespace

RunSummary cmd_run(const RunSpec& spec) {
  if (const auto issues = validate_config(spec.config); !issues.empty()) {
    std::string message = "invalid config:";
    for (const auto& issue : issues) message += " [" + issue.code + "] " + issue.message;
    throw HarnessError("invalid_config", message);
  }
  if (spec.backend_kind != "scripted" && spec.backend_kind != "http") {
    throw HarnessError("invalid_config", "unknown backend '" + spec.backend_kind + "'");
  }

  const auto manifest = data::DatasetManifest::load(spec.manifest_path);
  auto items = data::load_dataset(spec.dataset_path, manifest);
  if (spec.n_groups > 0) items = data::subsample(items, spec.n_groups, spec.seed);

  std::vector<AspectSpec> aspects;
  if (spec.aspects.empty()) {
    aspects = manifest.aspects;
  } else {
    for (const auto& name : spec.aspects) aspects.push_back(manifest.aspect(name));
  }

  const auto pack = prompts::PromptPack::load(
      spec.prompt_dir.empty() ? prompts::PromptPack::default_dir() : spec.prompt_dir);
  const std::string cfg_hash = engine::config_hash(spec.config);

  std::filesystem::create_directories(spec.out_dir);
  const auto ledger_path = spec.out_dir / "ledger.jsonl";
  std::set<std::string> done;
  if (std::filesystem::exists(ledger_path)) {
    if (!spec.resume) {
      throw HarnessError("ledger_exists", spec.out_dir.string() +
                                              " already holds a ledger; pass resume or use a "
                                              "fresh out dir");
    }
    for (const auto& record : read_ledger(spec.out_dir)) done.insert(record.key());
  }

  // Plan the work before any backend is touched.
  std::vector<DebateTask> tasks;
  int resumed = 0;
  for (const auto& item : items) {
    for (const auto& aspect : aspects) {
      const std::string key = item.item_id + "\x1f" + aspect.name + "\x1f" + cfg_hash;
      if (done.count(key)) {
        ++resumed;
        continue;
      }
      tasks.push_back(DebateTask{&item, &aspect});
    }
  }
  if (spec.limit > 0 && static_cast<long>(tasks.size()) > spec.limit) {
    tasks.resize(static_cast<size_t>(spec.limit));
  }

  RunSummary summary;
  summary.out_dir = spec.out_dir;
  summary.resumed = resumed;
  summary.total_planned = static_cast<int>(tasks.size());
  // Worst-case calls per debate: initial scoring and its routing, two calls
  // per iteration, one tie-break.
  const long per_debate = 2 + 2L * spec.config.max_iterations + 1;
  summary.estimated_calls = per_debate * static_cast<long>(tasks.size());
  if (spec.progress) {
    spec.progress("pre-flight: " + std::to_string(tasks.size()) + " debates, worst case " +
                  std::to_string(per_debate) + " calls each = " +
                  std::to_string(summary.estimated_calls) + " calls (" +
                  std::to_string(resumed) + " already in the ledger)");
  }
  if (spec.backend_kind == "http" && summary.estimated_calls > spec.max_calls) {
    throw HarnessError("call_budget",
                       "pre-flight estimate " + std::to_string(summary.estimated_calls) +
                           " calls exceeds the budget of " + std::to_string(spec.max_calls) +
                           "; raise --max-calls to confirm a run this size");
  }

  // Run manifest first: a run is reproducible from this file alone.
  {
    json run_manifest{{"created_at", iso_utc_now()},
                      {"dataset_path", spec.dataset_path.string()},
                      {"dataset_sha256", sha256_file(spec.dataset_path)},
                      {"dataset_manifest",
                       {{"path", spec.manifest_path.string()},
                        {"dataset_id", manifest.dataset_id},
                        {"correlation_convention", manifest.correlation_convention},
                        {"aspects", manifest.aspects}}},
                      {"config", spec.config},
                      {"config_hash", cfg_hash},
                      {"seed", spec.seed},
                      {"n_groups", spec.n_groups},
                      {"workers", spec.workers},
                      {"backend", spec.backend_kind},
                      {"concession_mode",
                       spec.concession_mode == parsing::ConcessionMode::literal ? "literal"
                                                                                : "standalone"},
                      {"template_id", spec.template_id},
                      {"estimated_calls", summary.estimated_calls},
                      {"critic_system_message",
                       pack.critic_system_message(spec.config.persona, spec.config.prompt_variant)}};
    json aspect_names = json::array();
    for (const auto& aspect : aspects) aspect_names.push_back(aspect.name);
    run_manifest["aspects"] = std::move(aspect_names);
    if (spec.backend_kind == "scripted") {
      run_manifest["scripted"] = {
          {"scorer_kind", std::string(scripted::to_string(spec.scripted.scorer_kind))},
          {"scorer_start", spec.scripted.scorer_start},
          {"concede_k", spec.scripted.concede_k},
          {"tiebreak_score", spec.scripted.tiebreak_score}};
    }
    std::ofstream out(spec.out_dir / "manifest.json");
    out << run_manifest.dump(2) << "\n";
  }

  backend::BackendPtr http;
  if (spec.backend_kind == "http") {
    http = std::make_shared<backend::HttpBackend>();
    if (!spec.cache_dir.empty()) http = backend::with_cache(http, spec.cache_dir);
  }

  std::ofstream ledger_out(ledger_path, std::ios::app);
  std::ofstream transcripts_out(spec.out_dir / "transcripts.jsonl", std::ios::app);
  std::mutex write_mutex;
  std::atomic<size_t> next_task{0};
  std::atomic<int> failures{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  const auto worker = [&]() {
    for (;;) {
      const size_t index = next_task.fetch_add(1);
      if (index >= tasks.size()) return;
      const DebateTask& task = tasks[index];
      try {
        const auto backends = spec.backend_kind == "http"
                                  ? engine::BackendSet::shared(http)
                                  : scripted_backends(spec.scripted, *task.item, *task.aspect);
        const auto agents = engine::build_agents(spec.config, pack, backends);

        LedgerRecord record;
        record.item_id = task.item->item_id;
        record.aspect = task.aspect->name;
        record.config_hash = cfg_hash;
        record.group_id = task.item->group_id;
        record.system_id = task.item->system_id;
        record.human_score = task.item->human_scores.at(task.aspect->name);

        engine::DebateOptions debate_options;
        debate_options.concession_mode = spec.concession_mode;
        debate_options.scoring_template_id = spec.template_id;

        json transcript_json;
        try {
          auto result = engine::run_debate(pack, manifest.task, *task.aspect, *task.item,
                                           spec.config, agents, debate_options);
          record.machine_score =
              result.outcome.final_score ? std::optional<int>(result.outcome.final_score->value)
                                         : std::nullopt;
          record.termination = result.outcome.termination;
          record.iterations_used = result.outcome.iterations_used;
          record.transcript_id = result.transcript.transcript_id();
          record.error = result.outcome.error;
          record.concession_excerpt = result.concession_excerpt;
          transcript_json = result.transcript;
        } catch (const engine::DebateAborted& aborted) {
          record.termination = Termination::failed;
          record.error = aborted.code() + ": " + aborted.what();
          record.transcript_id = aborted.transcript().transcript_id();
          record.iterations_used = aborted.transcript().reply_count(Role::critic);
          transcript_json = aborted.transcript();
        }
        if (record.termination == Termination::failed) failures.fetch_add(1);

        std::lock_guard<std::mutex> lock(write_mutex);
        ledger_out << json(record).dump() << "\n";
        ledger_out.flush();
        transcripts_out << transcript_json.dump() << "\n";
        transcripts_out.flush();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, spec.workers);
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  summary.executed = static_cast<int>(tasks.size());
  summary.failures = failures.load();
  return summary;
}

namespace {

std::optional<engine::Transcript> find_transcript(const std::filesystem::path& run_dir,
                                                  const std::function<bool(const json&)>& match) {
  std::ifstream in(run_dir / "transcripts.jsonl");
  if (!in) throw HarnessError("not_found", "no transcripts under " + run_dir.string());
  std::string line;
  std::optional<engine::Transcript> found;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    // Later lines win: a resumed run may retry nothing, but stay defensive
    // about duplicate ids from interrupted writes.
    if (match(j)) found = j.get<engine::Transcript>();
  }
  return found;
}

std::string render_transcript(const engine::Transcript& transcript,
                              const std::optional<LedgerRecord>& record) {
  std::ostringstream out;
  const auto& config = transcript.config();
  out << "Transcript " << transcript.transcript_id() << "\n";
  out << "item " << transcript.item_id() << ", aspect " << transcript.aspect() << ", style "
      << to_string(config.style) << ", persona " << to_string(config.persona) << ", n="
      << config.max_iterations << "\n\n";
  for (const auto& entry : transcript.entries()) {
    out << "[" << entry.seq << "] iteration " << entry.iteration << ", "
        << prompts::aspect_title(to_string(entry.role)) << " "
        << (entry.direction == Direction::request ? "<<" : ">>") << "\n";
    out << entry.content << "\n\n";
  }
  if (record) {
    out << "-- termination: " << to_string(record->termination);
    if (record->machine_score) {
      out << ", final score: " << *record->machine_score;
    }
    if (!record->error.empty()) out << ", error: " << record->error;
    if (!record->concession_excerpt.empty()) {
      out << ", concession trigger: \"" << record->concession_excerpt << "\"";
    }
    out << "\n";
  }
  return out.str();
}

std::optional<LedgerRecord> find_record(const std::filesystem::path& run_dir,
                                        const std::string& transcript_id) {
  for (const auto& record : read_ledger(run_dir)) {
    if (record.transcript_id == transcript_id) return record;
  }
  return std::nullopt;
}

}  // namespace

std::string cmd_inspect(const std::filesystem::path& run_dir, const std::string& transcript_id) {
  const auto transcript = find_transcript(run_dir, [&](const json& j) {
    return j.value("transcript_id", "") == transcript_id;
  });
  if (!transcript) {
    throw HarnessError("not_found", "no transcript '" + transcript_id + "' in " +
                                        run_dir.string());
  }
  return render_transcript(*transcript, find_record(run_dir, transcript_id));
}

std::string cmd_inspect(const std::filesystem::path& run_dir, const std::string& item_id,
                        const std::string& aspect) {
  const auto transcript = find_transcript(run_dir, [&](const json& j) {
    return j.value("item_id", "") == item_id && j.value("aspect", "") == aspect;
  });
  if (!transcript) {
    throw HarnessError("not_found",
                       "no transcript for item '" + item_id + "', aspect '" + aspect + "'");
  }
  return render_transcript(*transcript, find_record(run_dir, transcript->transcript_id()));
}

std::vector<AblateCell> cmd_ablate(const RunSpec& base, const AblateGrid& grid) {
  if (grid.iterations.empty() || grid.personas.empty() || grid.styles.empty()) {
    throw HarnessError("invalid_grid", "every grid dimension needs at least one value");
  }
  std::vector<AblateCell> cells;
  for (const int n : grid.iterations) {
    for (const auto persona : grid.personas) {
      for (const auto style : grid.styles) {
        AblateCell cell;
        cell.config = base.config;
        cell.config.max_iterations = n;
        cell.config.persona = persona;
        cell.config.style = style;
        // A gridded persona is an explicit experiment: let it cut across
        // styles the defaults would reject.
        if (grid.persona_gridded) cell.config.persona_override = true;
        cell.name = "n" + std::to_string(n) + "_" + std::string(to_string(persona)) + "_" +
                    std::string(to_string(style));
        cell.out_dir = base.out_dir / cell.name;
        cells.push_back(std::move(cell));
      }
    }
  }

  for (auto& cell : cells) {
    RunSpec spec = base;
    spec.config = cell.config;
    spec.out_dir = cell.out_dir;
    try {
      cmd_run(spec);
    } catch (const std::exception& ex) {
      cell.error = ex.what();
    }
  }

  json combined = json::array();
  for (const auto& cell : cells) {
    json entry{{"cell", cell.name}, {"config", cell.config}, {"out_dir", cell.out_dir.string()}};
    if (!cell.error.empty()) entry["error"] = cell.error;
    combined.push_back(std::move(entry));
  }
  std::filesystem::create_directories(base.out_dir);
  std::ofstream out(base.out_dir / "cells.json");
  out << combined.dump(2) << "\n";
  return cells;
}

}  // namespace debate::harness
