#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "debate/backend.hpp"
#include "debate/core.hpp"
#include "debate/parsing.hpp"
#include "debate/prompts.hpp"

namespace debate::engine {

struct AgentHandle {
  Role role = Role::scorer;
  std::string system_message;
  backend::BackendPtr backend;
  ModelParams params;
};

struct Agents {
  AgentHandle scorer;
  AgentHandle critic;
  std::optional<AgentHandle> tiebreaker;  // only for tie_breaker / both styles
  std::optional<AgentHandle> commander;   // only in llm commander mode
};

/// Per-role backends. Scripted runs give every agent its own instance;
/// live runs share one HTTP backend.
struct BackendSet {
  backend::BackendPtr scorer;
  backend::BackendPtr critic;
  backend::BackendPtr tiebreaker;
  backend::BackendPtr commander;

  static BackendSet shared(backend::BackendPtr b) { return BackendSet{b, b, b, b}; }
};

/// Wires system messages to roles per the config: the Critic gets the
/// persona/variant message, the Tie-Breaker exists only when the style asks
/// for one.
Agents build_agents(const DebateConfig& config, const prompts::PromptPack& pack,
                    const BackendSet& backends);

/// Ordered record of one debate; the Commander's "collective memory".
class Transcript {
 public:
  Transcript() = default;
  Transcript(std::string transcript_id, std::string item_id, std::string aspect,
             DebateConfig config);

  void append(Role role, Direction direction, int iteration, std::string content,
              std::optional<TokenUsage> usage = std::nullopt);
  void seal();

  const std::string& transcript_id() const { return transcript_id_; }
  const std::string& item_id() const { return item_id_; }
  const std::string& aspect() const { return aspect_; }
  const DebateConfig& config() const { return config_; }
  const std::vector<TranscriptEntry>& entries() const { return entries_; }
  bool sealed() const { return sealed_; }

  /// Latest reply content by `role`, if any.
  const TranscriptEntry* last_reply(Role role) const;
  /// The prompt the Scorer was first asked to answer.
  const TranscriptEntry* initial_prompt() const;
  int reply_count(Role role) const;

  friend void to_json(nlohmann::json& j, const Transcript& t);
  friend void from_json(const nlohmann::json& j, Transcript& t);

 private:
  std::string transcript_id_;
  std::string item_id_;
  std::string aspect_;
  DebateConfig config_;
  std::vector<TranscriptEntry> entries_;
  bool sealed_ = false;
};

/// Builds the message list the Commander hands to `to`, from the transcript
/// alone: the Critic sees the original prompt plus the Scorer's latest
/// reply; the Scorer sees its own thread plus a revision request embedding
/// the Critic's feedback; the Tie-Breaker sees the whole debate log, and
/// only once the loop is exhausted (DomainError "protocol_violation"
/// otherwise).
std::vector<backend::ChatMessage> commander_route(const prompts::PromptPack& pack,
                                                  const TaskSpec& task, const AspectSpec& aspect,
                                                  const EvaluationItem& item,
                                                  const DebateConfig& config, const Agents& agents,
                                                  const Transcript& transcript, Role to);

struct DebateResult {
  DebateOutcome outcome;
  Transcript transcript;
  // Audit trail for the concession rule: byte range and excerpt of the
  // matched token sequence in the conceding feedback.
  std::optional<std::pair<size_t, size_t>> concession_span;
  std::string concession_excerpt;
};

/// Raised when the backend gives out mid-debate; carries the partial
/// transcript so callers can persist what happened.
class DebateAborted : public std::runtime_error {
 public:
  DebateAborted(std::string code, const std::string& message, Transcript partial)
      : std::runtime_error(message), code_(std::move(code)), transcript_(std::move(partial)) {}
  const std::string& code() const { return code_; }
  const Transcript& transcript() const { return transcript_; }

 private:
  std::string code_;
  Transcript transcript_;
};

struct DebateOptions {
  parsing::ConcessionMode concession_mode = parsing::ConcessionMode::literal;
  std::string scoring_template_id = "debate";
};

/// Runs one debate: initial scoring, the Critic/Scorer loop with Commander
/// routing, and the final-score rule (concession score, tie-breaker ruling,
/// or the score from the last iteration). Unparseable scores get one
/// bounded reprompt and otherwise fail the debate; a failed debate never
/// fabricates a score.
DebateResult run_debate(const prompts::PromptPack& pack, const TaskSpec& task,
                        const AspectSpec& aspect, const EvaluationItem& item,
                        const DebateConfig& config, const Agents& agents,
                        const DebateOptions& options = {});

/// Stable short hash of the config snapshot; keys ledgers and transcripts.
std::string config_hash(const DebateConfig& config);

}  // namespace debate::engine
