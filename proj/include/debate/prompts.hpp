#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "debate/core.hpp"

namespace debate::prompts {

class PromptError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A text body with {snake_case} placeholders. Every required placeholder
/// must occur in the body exactly once; rendering with a complete binding
/// leaves no residual markers.
struct PromptTemplate {
  std::string template_id;
  std::string task;    // "summarization", "dialogue_response" or "*"
  std::string aspect;  // aspect name or "*"
  std::string body;
  std::set<std::string> required_placeholders;
  std::string cot_cue;  // non-empty when the template must carry a chain-of-thought cue
  bool reconstruction = false;

  /// Throws PromptError("invalid_template") when a required placeholder is
  /// missing or duplicated in the body.
  void validate() const;
};

/// Substitutes bindings into every {placeholder} in the body. Unknown
/// markers raise PromptError("unbound_placeholder"), so the output can
/// never carry a residual marker.
std::string render_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& bindings);

struct SystemMessageSet {
  std::string commander;
  std::string scorer;
  std::map<PersonaLevel, std::string> critic_by_persona;  // the original-variant ladder
  std::string critic_sophisticated;                       // strictly_negative only
  std::string tiebreaker;
};

/// Directory of prompt text files plus a manifest with per-file sha256.
/// Loading verifies every hash, so a silently edited prompt cannot sneak
/// into a run.
class PromptPack {
 public:
  static PromptPack load(const std::filesystem::path& dir);
  static std::filesystem::path default_dir();

  const SystemMessageSet& system_messages() const { return system_; }

  /// The critic system message for (persona, variant). The sophisticated
  /// variant exists only for strictly_negative; anything else is
  /// unsupported_combination.
  const std::string& critic_system_message(PersonaLevel persona, PromptVariant variant) const;

  /// Scoring template lookup with wildcard fallback:
  /// (task, aspect, id) -> (task, *, id) -> (*, *, id).
  const PromptTemplate& scoring_template(TaskKind task, std::string_view aspect,
                                         std::string_view template_id) const;
  const PromptTemplate& named_template(std::string_view template_id) const;

  const std::vector<PromptTemplate>& templates() const { return templates_; }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  SystemMessageSet system_;
  std::vector<PromptTemplate> templates_;
};

/// Capitalized aspect display name ("coherence" -> "Coherence").
std::string aspect_title(std::string_view name);

/// The "Coherence (1-5) - ..." line used inside every evaluation form.
std::string criteria_line(const AspectSpec& aspect);

/// Joins the item's blocks for the task's labels, in label order:
/// "Label:\n\n<text>" per block. Missing labels raise
/// PromptError("missing_block").
std::string render_context_blocks(const TaskSpec& task, const EvaluationItem& item);

/// The full prompt handed to the Scorer: instruction, criteria, steps,
/// labeled context blocks, evaluation form.
std::string render_scoring_prompt(const PromptPack& pack, const TaskSpec& task,
                                  const AspectSpec& aspect, const EvaluationItem& item,
                                  std::string_view template_id = "debate");

/// Commander wrapper that forwards the Scorer's reply to the Critic.
std::string render_critic_forward(const PromptPack& pack, const std::string& scoring_prompt,
                                  const std::string& scorer_reply);

/// Commander wrapper that forwards Critic feedback back to the Scorer,
/// asking for a revised integer score within the scale.
std::string render_revision_request(const PromptPack& pack, const std::string& feedback,
                                    int scale_min, int scale_max);

/// Serializes reply entries as "Role: content" turns in seq order.
std::string render_debate_log(const std::vector<TranscriptEntry>& entries);

/// The Tie-Breaker prompt: its instruction, the criteria and steps, the
/// item's context blocks and the full debate log. An empty transcript is
/// PromptError("empty_transcript").
std::string render_tiebreaker_prompt(const PromptPack& pack, const TaskSpec& task,
                                     const AspectSpec& aspect, const EvaluationItem& item,
                                     const std::vector<TranscriptEntry>& entries);

}  // namespace debate::prompts
