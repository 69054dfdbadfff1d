#pragma once

// JSON bindings for the core vocabulary. Enums serialize as their
// snake_case names so every on-disk artifact stays greppable.

#include <nlohmann/json.hpp>

#include "debate/core.hpp"

namespace debate {

void to_json(nlohmann::json& j, const TaskKind& v);
void from_json(const nlohmann::json& j, TaskKind& v);
void to_json(nlohmann::json& j, const PersonaLevel& v);
void from_json(const nlohmann::json& j, PersonaLevel& v);
void to_json(nlohmann::json& j, const DebateStyle& v);
void from_json(const nlohmann::json& j, DebateStyle& v);
void to_json(nlohmann::json& j, const PromptVariant& v);
void from_json(const nlohmann::json& j, PromptVariant& v);
void to_json(nlohmann::json& j, const CommanderMode& v);
void from_json(const nlohmann::json& j, CommanderMode& v);
void to_json(nlohmann::json& j, const Role& v);
void from_json(const nlohmann::json& j, Role& v);
void to_json(nlohmann::json& j, const Direction& v);
void from_json(const nlohmann::json& j, Direction& v);
void to_json(nlohmann::json& j, const Termination& v);
void from_json(const nlohmann::json& j, Termination& v);

void to_json(nlohmann::json& j, const AspectSpec& v);
void from_json(const nlohmann::json& j, AspectSpec& v);
void to_json(nlohmann::json& j, const TaskSpec& v);
void from_json(const nlohmann::json& j, TaskSpec& v);
void to_json(nlohmann::json& j, const ContextBlock& v);
void from_json(const nlohmann::json& j, ContextBlock& v);
void to_json(nlohmann::json& j, const EvaluationItem& v);
void from_json(const nlohmann::json& j, EvaluationItem& v);
void to_json(nlohmann::json& j, const ScoreValue& v);
void from_json(const nlohmann::json& j, ScoreValue& v);
void to_json(nlohmann::json& j, const ModelParams& v);
void from_json(const nlohmann::json& j, ModelParams& v);
void to_json(nlohmann::json& j, const DebateConfig& v);
void from_json(const nlohmann::json& j, DebateConfig& v);
void to_json(nlohmann::json& j, const TokenUsage& v);
void from_json(const nlohmann::json& j, TokenUsage& v);
void to_json(nlohmann::json& j, const TranscriptEntry& v);
void from_json(const nlohmann::json& j, TranscriptEntry& v);
void to_json(nlohmann::json& j, const DebateOutcome& v);
void from_json(const nlohmann::json& j, DebateOutcome& v);

}  // namespace debate
