#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace debate {

enum class TaskKind { summarization, dialogue_response };

enum class PersonaLevel { plain, weakly_negative, moderately_negative, strictly_negative };

enum class DebateStyle { plain, devils_advocate, tie_breaker, both };

enum class PromptVariant { original, sophisticated };

enum class CommanderMode { router, llm };

enum class Role { commander, scorer, critic, tiebreaker };

enum class Direction { request, reply };

enum class Termination { critic_conceded, iteration_cap, tie_broken, failed };

std::string_view to_string(TaskKind v);
std::string_view to_string(PersonaLevel v);
std::string_view to_string(DebateStyle v);
std::string_view to_string(PromptVariant v);
std::string_view to_string(CommanderMode v);
std::string_view to_string(Role v);
std::string_view to_string(Direction v);
std::string_view to_string(Termination v);

TaskKind parse_task_kind(std::string_view s);
PersonaLevel parse_persona_level(std::string_view s);
DebateStyle parse_debate_style(std::string_view s);
PromptVariant parse_prompt_variant(std::string_view s);
CommanderMode parse_commander_mode(std::string_view s);
Role parse_role(std::string_view s);
Direction parse_direction(std::string_view s);
Termination parse_termination(std::string_view s);

/// One evaluation dimension: name, prose definition, ordered steps, integer scale.
struct AspectSpec {
  std::string name;
  std::string criteria_text;
  std::string steps_text;
  int scale_min = 1;
  int scale_max = 5;
  bool reconstruction = false;

  friend bool operator==(const AspectSpec&, const AspectSpec&) = default;
};

struct TaskSpec {
  TaskKind task_kind = TaskKind::summarization;
  std::string instruction_text;
  std::vector<std::string> context_labels;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct ContextBlock {
  std::string label;
  std::string text;

  friend bool operator==(const ContextBlock&, const ContextBlock&) = default;
};

/// One (source, candidate) pair to score, with human ratings for meta-evaluation.
struct EvaluationItem {
  std::string item_id;
  std::string group_id;
  std::string system_id;
  std::vector<ContextBlock> context_blocks;
  std::map<std::string, double> human_scores;

  const ContextBlock* find_block(std::string_view label) const;

  friend bool operator==(const EvaluationItem&, const EvaluationItem&) = default;
};

struct ScoreValue {
  int value = 0;
  std::string aspect;

  friend bool operator==(const ScoreValue&, const ScoreValue&) = default;
};

/// Bounds-checked constructor; the only sanctioned way to build a ScoreValue.
ScoreValue make_score(int value, const AspectSpec& aspect);

struct ModelParams {
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  double top_p = 1.0;
  double frequency_penalty = 0.0;
  double presence_penalty = 0.0;
  std::optional<int> max_output_tokens;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

struct DebateConfig {
  int max_iterations = 4;
  PersonaLevel persona = PersonaLevel::strictly_negative;
  DebateStyle style = DebateStyle::devils_advocate;
  PromptVariant prompt_variant = PromptVariant::original;
  CommanderMode commander_mode = CommanderMode::router;
  ModelParams model_params;
  std::string backend_id = "scripted";
  // Allows a persona that contradicts the style (ablation escape hatch).
  bool persona_override = false;

  friend bool operator==(const DebateConfig&, const DebateConfig&) = default;
};

/// Style-consistent config: plain/tie_breaker get a plain critic, the
/// Devil's Advocate styles get the strictly negative one.
DebateConfig make_config(DebateStyle style, int max_iterations = 4);

struct ConfigIssue {
  std::string code;
  std::string message;

  friend bool operator==(const ConfigIssue&, const ConfigIssue&) = default;
};

/// Empty result means the config is valid; otherwise one issue per violated invariant.
std::vector<ConfigIssue> validate_config(const DebateConfig& config);

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;

  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct TranscriptEntry {
  int seq = 0;
  int iteration = 0;  // 0 = initial scoring
  Role role = Role::scorer;
  Direction direction = Direction::request;
  std::string content;
  std::string timestamp;
  std::optional<TokenUsage> token_usage;

  friend bool operator==(const TranscriptEntry&, const TranscriptEntry&) = default;
};

struct DebateOutcome {
  std::optional<ScoreValue> final_score;
  Termination termination = Termination::failed;
  int iterations_used = 0;
  std::string transcript_id;
  std::string error;

  friend bool operator==(const DebateOutcome&, const DebateOutcome&) = default;
};

/// Checks the outcome invariant matrix against the config that produced it.
/// Throws std::logic_error on violation; returns the outcome otherwise.
const DebateOutcome& check_outcome(const DebateOutcome& outcome, const DebateConfig& config);

class DomainError : public std::runtime_error {
 public:
  DomainError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Wall-clock UTC timestamp, ISO 8601 ("2024-05-01T12:00:00Z").
std::string iso_utc_now();

}  // namespace debate
