#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "debate/core.hpp"
#include "debate/datasets.hpp"
#include "debate/engine.hpp"
#include "debate/scripted_policies.hpp"

namespace debate::harness {

class HarnessError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Scripted-agent selection for offline runs. A zero start/tiebreak score
/// means "derive per item": the value is hashed from (item_id, aspect) so
/// machine scores vary across a dataset instead of collapsing to one
/// constant vector.
struct ScriptedSpec {
  scripted::PolicyKind scorer_kind = scripted::PolicyKind::constant_scorer;
  int scorer_start = 0;  // 0 = per-item hash
  int concede_k = 2;     // 0 = never concede (always_criticize)
  int tiebreak_score = 0;  // 0 = per-item hash
  std::string criticism_text;  // empty = policy default

  static ScriptedSpec parse(const std::string& scorer, const std::string& critic,
                            const std::string& tiebreak);
};

struct RunSpec {
  std::filesystem::path dataset_path;
  std::filesystem::path manifest_path;
  std::vector<std::string> aspects;  // empty = every manifest aspect
  DebateConfig config;
  int workers = 1;
  std::filesystem::path out_dir;
  bool resume = false;
  std::uint64_t seed = 0;
  int n_groups = 0;  // 0 = the whole dataset
  std::string backend_kind = "scripted";  // "scripted" or "http"
  ScriptedSpec scripted;
  std::filesystem::path cache_dir;  // http only; empty = uncached
  long max_calls = 1000;            // pre-flight budget for http runs
  long limit = 0;                   // stop after N new outcomes (smoke runs)
  std::filesystem::path prompt_dir;  // empty = PromptPack::default_dir()
  // literal = the published substring rule; standalone = stricter
  // whole-line declarations only.
  parsing::ConcessionMode concession_mode = parsing::ConcessionMode::literal;
  std::string template_id = "debate";  // or "scores_only" for the bare form
  std::function<void(const std::string&)> progress;  // pre-flight and status lines
};

/// One line of the append-only outcome ledger. Keyed by
/// (item_id, aspect, config_hash); deliberately timestamp-free so a
/// scripted rerun reproduces the file byte for byte.
struct LedgerRecord {
  std::string item_id;
  std::string aspect;
  std::string config_hash;
  std::string group_id;
  std::string system_id;
  double human_score = 0.0;
  std::optional<int> machine_score;
  Termination termination = Termination::failed;
  int iterations_used = 0;
  std::string transcript_id;
  std::string error;
  std::string concession_excerpt;

  std::string key() const { return item_id + "\x1f" + aspect + "\x1f" + config_hash; }
};

void to_json(nlohmann::json& j, const LedgerRecord& r);
void from_json(const nlohmann::json& j, LedgerRecord& r);

struct RunSummary {
  int executed = 0;  // debates run by this invocation
  int resumed = 0;   // skipped via the ledger
  int failures = 0;  // failed outcomes written by this invocation
  int total_planned = 0;
  long estimated_calls = 0;
  std::filesystem::path out_dir;
};

/// Executes one debate per (item, aspect) over a worker pool, appending
/// outcomes and transcripts as they complete. With resume, pairs already in
/// the ledger are skipped. Fatal problems (config, dataset, budget) throw
/// HarnessError; per-debate failures are recorded, never scored.
RunSummary cmd_run(const RunSpec& spec);

/// Reads a run's ledger, newest record per key first-wins, in file order.
std::vector<LedgerRecord> read_ledger(const std::filesystem::path& run_dir);

nlohmann::json read_run_manifest(const std::filesystem::path& run_dir);

/// Renders one stored transcript as a role-labeled, iteration-annotated
/// text block with the outcome footer. Query by transcript id or by
/// (item_id, aspect). DomainError("not_found") when absent.
std::string cmd_inspect(const std::filesystem::path& run_dir, const std::string& transcript_id);
std::string cmd_inspect(const std::filesystem::path& run_dir, const std::string& item_id,
                        const std::string& aspect);

struct AblateGrid {
  std::vector<int> iterations;
  std::vector<PersonaLevel> personas;
  std::vector<DebateStyle> styles;
  bool persona_gridded = false;  // set when personas came from the user
};

struct AblateCell {
  std::string name;
  DebateConfig config;
  std::filesystem::path out_dir;
  std::string error;  // non-empty when the cell failed
};

/// Runs the full pipeline per grid cell under out_dir/<cell>, sharing the
/// response cache, and writes a combined per-cell table.
std::vector<AblateCell> cmd_ablate(const RunSpec& base, const AblateGrid& grid);

}  // namespace debate::harness
