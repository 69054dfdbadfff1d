#include "debate/core.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>

#include "debate/serde.hpp"

namespace debate {
namespace {

template <typename E>
[[noreturn]] void bad_enum(std::string_view what, std::string_view value) {
  throw DomainError("bad_enum", std::string(what) + ": unknown value '" + std::string(value) + "'");
}

}  // namespace

std::string_view to_string(TaskKind v) {
  switch (v) {
    case TaskKind::summarization: return "summarization";
    case TaskKind::dialogue_response: return "dialogue_response";
  }
  return "?";
}

std::string_view to_string(PersonaLevel v) {
  switch (v) {
    case PersonaLevel::plain: return "plain";
    case PersonaLevel::weakly_negative: return "weakly_negative";
    case PersonaLevel::moderately_negative: return "moderately_negative";
    case PersonaLevel::strictly_negative: return "strictly_negative";
  }
  return "?";
}

std::string_view to_string(DebateStyle v) {
  switch (v) {
    case DebateStyle::plain: return "plain";
    case DebateStyle::devils_advocate: return "devils_advocate";
    case DebateStyle::tie_breaker: return "tie_breaker";
    case DebateStyle::both: return "both";
  }
  return "?";
}

std::string_view to_string(PromptVariant v) {
  switch (v) {
    case PromptVariant::original: return "original";
    case PromptVariant::sophisticated: return "sophisticated";
  }
  return "?";
}

std::string_view to_string(CommanderMode v) {
  switch (v) {
    case CommanderMode::router: return "router";
    case CommanderMode::llm: return "llm";
  }
  return "?";
}

std::string_view to_string(Role v) {
  switch (v) {
    case Role::commander: return "commander";
    case Role::scorer: return "scorer";
    case Role::critic: return "critic";
    case Role::tiebreaker: return "tiebreaker";
  }
  return "?";
}

std::string_view to_string(Direction v) {
  return v == Direction::request ? "request" : "reply";
}

std::string_view to_string(Termination v) {
  switch (v) {
    case Termination::critic_conceded: return "critic_conceded";
    case Termination::iteration_cap: return "iteration_cap";
    case Termination::tie_broken: return "tie_broken";
    case Termination::failed: return "failed";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "summarization") return TaskKind::summarization;
  if (s == "dialogue_response") return TaskKind::dialogue_response;
  bad_enum<TaskKind>("task_kind", s);
}

PersonaLevel parse_persona_level(std::string_view s) {
  if (s == "plain") return PersonaLevel::plain;
  if (s == "weakly_negative") return PersonaLevel::weakly_negative;
  if (s == "moderately_negative") return PersonaLevel::moderately_negative;
  if (s == "strictly_negative") return PersonaLevel::strictly_negative;
  bad_enum<PersonaLevel>("persona", s);
}

DebateStyle parse_debate_style(std::string_view s) {
  if (s == "plain") return DebateStyle::plain;
  if (s == "devils_advocate") return DebateStyle::devils_advocate;
  if (s == "tie_breaker") return DebateStyle::tie_breaker;
  if (s == "both") return DebateStyle::both;
  bad_enum<DebateStyle>("style", s);
}

PromptVariant parse_prompt_variant(std::string_view s) {
  if (s == "original") return PromptVariant::original;
  if (s == "sophisticated") return PromptVariant::sophisticated;
  bad_enum<PromptVariant>("prompt_variant", s);
}

CommanderMode parse_commander_mode(std::string_view s) {
  if (s == "router") return CommanderMode::router;
  if (s == "llm") return CommanderMode::llm;
  bad_enum<CommanderMode>("commander_mode", s);
}

Role parse_role(std::string_view s) {
  if (s == "commander") return Role::commander;
  if (s == "scorer") return Role::scorer;
  if (s == "critic") return Role::critic;
  if (s == "tiebreaker") return Role::tiebreaker;
  bad_enum<Role>("role", s);
}

Direction parse_direction(std::string_view s) {
  if (s == "request") return Direction::request;
  if (s == "reply") return Direction::reply;
  bad_enum<Direction>("direction", s);
}

Termination parse_termination(std::string_view s) {
  if (s == "critic_conceded") return Termination::critic_conceded;
  if (s == "iteration_cap") return Termination::iteration_cap;
  if (s == "tie_broken") return Termination::tie_broken;
  if (s == "failed") return Termination::failed;
  bad_enum<Termination>("termination", s);
}

const ContextBlock* EvaluationItem::find_block(std::string_view label) const {
  auto it = std::find_if(context_blocks.begin(), context_blocks.end(),
                         [&](const ContextBlock& b) { return b.label == label; });
  return it == context_blocks.end() ? nullptr : &*it;
}

ScoreValue make_score(int value, const AspectSpec& aspect) {
  if (value < aspect.scale_min || value > aspect.scale_max) {
    throw DomainError("out_of_range", "score " + std::to_string(value) + " outside scale [" +
                                          std::to_string(aspect.scale_min) + ", " +
                                          std::to_string(aspect.scale_max) + "] for aspect '" +
                                          aspect.name + "'");
  }
  return ScoreValue{value, aspect.name};
}

DebateConfig make_config(DebateStyle style, int max_iterations) {
  DebateConfig config;
  config.style = style;
  config.max_iterations = max_iterations;
  config.persona = (style == DebateStyle::devils_advocate || style == DebateStyle::both)
                       ? PersonaLevel::strictly_negative
                       : PersonaLevel::plain;
  return config;
}

std::vector<ConfigIssue> validate_config(const DebateConfig& config) {
  std::vector<ConfigIssue> issues;
  if (config.max_iterations < 1) {
    issues.push_back({"invalid_iterations",
                      "max_iterations must be >= 1, got " + std::to_string(config.max_iterations)});
  }
  const bool wants_devils_advocate =
      config.style == DebateStyle::devils_advocate || config.style == DebateStyle::both;
  if (wants_devils_advocate && config.persona != PersonaLevel::strictly_negative &&
      !config.persona_override) {
    issues.push_back({"inconsistent_style",
                      std::string("style ") + std::string(to_string(config.style)) +
                          " requires a strictly_negative persona (got " +
                          std::string(to_string(config.persona)) +
                          "); set persona_override to run the combination anyway"});
  }
  if (config.prompt_variant == PromptVariant::sophisticated &&
      config.persona != PersonaLevel::strictly_negative) {
    issues.push_back({"inconsistent_style",
                      "the sophisticated prompt variant exists only for the strictly_negative "
                      "persona"});
  }
  return issues;
}

const DebateOutcome& check_outcome(const DebateOutcome& outcome, const DebateConfig& config) {
  const bool tiebreak_allowed =
      config.style == DebateStyle::tie_breaker || config.style == DebateStyle::both;
  switch (outcome.termination) {
    case Termination::critic_conceded:
      if (outcome.iterations_used > config.max_iterations)
        throw std::logic_error("critic_conceded after more iterations than the cap");
      if (!outcome.final_score) throw std::logic_error("critic_conceded without a final score");
      break;
    case Termination::iteration_cap:
      if (!outcome.final_score) throw std::logic_error("iteration_cap without a final score");
      break;
    case Termination::tie_broken:
      if (!tiebreak_allowed)
        throw std::logic_error("tie_broken outcome under a style without a tie-breaker");
      if (!outcome.final_score) throw std::logic_error("tie_broken without a final score");
      break;
    case Termination::failed:
      if (outcome.final_score) throw std::logic_error("failed outcome carries a final score");
      if (outcome.error.empty()) throw std::logic_error("failed outcome without a recorded error");
      break;
  }
  return outcome;
}

std::string iso_utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// JSON bindings

using nlohmann::json;

#define DEBATE_ENUM_JSON(Type, parser)                                    \
  void to_json(json& j, const Type& v) { j = std::string(to_string(v)); } \
  void from_json(const json& j, Type& v) { v = parser(j.get<std::string>()); }

DEBATE_ENUM_JSON(TaskKind, parse_task_kind)
DEBATE_ENUM_JSON(PersonaLevel, parse_persona_level)
DEBATE_ENUM_JSON(DebateStyle, parse_debate_style)
DEBATE_ENUM_JSON(PromptVariant, parse_prompt_variant)
DEBATE_ENUM_JSON(CommanderMode, parse_commander_mode)
DEBATE_ENUM_JSON(Role, parse_role)
DEBATE_ENUM_JSON(Direction, parse_direction)
DEBATE_ENUM_JSON(Termination, parse_termination)

#undef DEBATE_ENUM_JSON

void to_json(json& j, const AspectSpec& v) {
  j = json{{"name", v.name},
           {"criteria_text", v.criteria_text},
           {"steps_text", v.steps_text},
           {"scale_min", v.scale_min},
           {"scale_max", v.scale_max},
           {"reconstruction", v.reconstruction}};
}

void from_json(const json& j, AspectSpec& v) {
  j.at("name").get_to(v.name);
  j.at("criteria_text").get_to(v.criteria_text);
  j.at("steps_text").get_to(v.steps_text);
  j.at("scale_min").get_to(v.scale_min);
  j.at("scale_max").get_to(v.scale_max);
  v.reconstruction = j.value("reconstruction", false);
  if (v.name.empty()) throw DomainError("invalid_aspect", "aspect name is empty");
  if (v.criteria_text.empty())
    throw DomainError("invalid_aspect", "aspect '" + v.name + "' has no criteria text");
  if (v.scale_min >= v.scale_max)
    throw DomainError("invalid_aspect", "aspect '" + v.name + "' has a degenerate scale");
}

void to_json(json& j, const TaskSpec& v) {
  j = json{{"task_kind", v.task_kind},
           {"instruction_text", v.instruction_text},
           {"context_labels", v.context_labels}};
}

void from_json(const json& j, TaskSpec& v) {
  j.at("task_kind").get_to(v.task_kind);
  j.at("instruction_text").get_to(v.instruction_text);
  j.at("context_labels").get_to(v.context_labels);
  if (v.instruction_text.empty()) throw DomainError("invalid_task", "instruction_text is empty");
  if (v.context_labels.empty()) throw DomainError("invalid_task", "context_labels is empty");
}

void to_json(json& j, const ContextBlock& v) {
  j = json{{"label", v.label}, {"text", v.text}};
}

void from_json(const json& j, ContextBlock& v) {
  j.at("label").get_to(v.label);
  j.at("text").get_to(v.text);
}

void to_json(json& j, const EvaluationItem& v) {
  j = json{{"item_id", v.item_id},
           {"group_id", v.group_id},
           {"system_id", v.system_id},
           {"context", v.context_blocks},
           {"human", v.human_scores}};
}

void from_json(const json& j, EvaluationItem& v) {
  j.at("item_id").get_to(v.item_id);
  j.at("group_id").get_to(v.group_id);
  v.system_id = j.value("system_id", "");
  j.at("context").get_to(v.context_blocks);
  j.at("human").get_to(v.human_scores);
}

void to_json(json& j, const ScoreValue& v) {
  j = json{{"value", v.value}, {"aspect", v.aspect}};
}

void from_json(const json& j, ScoreValue& v) {
  j.at("value").get_to(v.value);
  j.at("aspect").get_to(v.aspect);
}

void to_json(json& j, const ModelParams& v) {
  j = json{{"model_name", v.model_name},
           {"temperature", v.temperature},
           {"top_p", v.top_p},
           {"frequency_penalty", v.frequency_penalty},
           {"presence_penalty", v.presence_penalty}};
  if (v.max_output_tokens) j["max_output_tokens"] = *v.max_output_tokens;
}

void from_json(const json& j, ModelParams& v) {
  j.at("model_name").get_to(v.model_name);
  j.at("temperature").get_to(v.temperature);
  j.at("top_p").get_to(v.top_p);
  j.at("frequency_penalty").get_to(v.frequency_penalty);
  j.at("presence_penalty").get_to(v.presence_penalty);
  if (j.contains("max_output_tokens")) v.max_output_tokens = j.at("max_output_tokens").get<int>();
}

void to_json(json& j, const DebateConfig& v) {
  j = json{{"max_iterations", v.max_iterations},
           {"persona", v.persona},
           {"style", v.style},
           {"prompt_variant", v.prompt_variant},
           {"commander_mode", v.commander_mode},
           {"model_params", v.model_params},
           {"backend_id", v.backend_id},
           {"persona_override", v.persona_override}};
}

void from_json(const json& j, DebateConfig& v) {
  j.at("max_iterations").get_to(v.max_iterations);
  j.at("persona").get_to(v.persona);
  j.at("style").get_to(v.style);
  j.at("prompt_variant").get_to(v.prompt_variant);
  v.commander_mode = j.contains("commander_mode")
                         ? j.at("commander_mode").get<CommanderMode>()
                         : CommanderMode::router;
  j.at("model_params").get_to(v.model_params);
  j.at("backend_id").get_to(v.backend_id);
  v.persona_override = j.value("persona_override", false);
}

void to_json(json& j, const TokenUsage& v) {
  j = json{{"prompt_tokens", v.prompt_tokens}, {"completion_tokens", v.completion_tokens}};
}

void from_json(const json& j, TokenUsage& v) {
  j.at("prompt_tokens").get_to(v.prompt_tokens);
  j.at("completion_tokens").get_to(v.completion_tokens);
}

void to_json(json& j, const TranscriptEntry& v) {
  j = json{{"seq", v.seq},
           {"iteration", v.iteration},
           {"role", v.role},
           {"direction", v.direction},
           {"content", v.content},
           {"timestamp", v.timestamp}};
  if (v.token_usage) j["token_usage"] = *v.token_usage;
}

void from_json(const json& j, TranscriptEntry& v) {
  j.at("seq").get_to(v.seq);
  j.at("iteration").get_to(v.iteration);
  j.at("role").get_to(v.role);
  j.at("direction").get_to(v.direction);
  j.at("content").get_to(v.content);
  j.at("timestamp").get_to(v.timestamp);
  if (j.contains("token_usage")) v.token_usage = j.at("token_usage").get<TokenUsage>();
}

void to_json(json& j, const DebateOutcome& v) {
  j = json{{"termination", v.termination},
           {"iterations_used", v.iterations_used},
           {"transcript_id", v.transcript_id}};
  if (v.final_score) j["final_score"] = *v.final_score;
  if (!v.error.empty()) j["error"] = v.error;
}

void from_json(const json& j, DebateOutcome& v) {
  j.at("termination").get_to(v.termination);
  j.at("iterations_used").get_to(v.iterations_used);
  j.at("transcript_id").get_to(v.transcript_id);
  if (j.contains("final_score")) v.final_score = j.at("final_score").get<ScoreValue>();
  v.error = j.value("error", "");
}

}  // namespace debate
