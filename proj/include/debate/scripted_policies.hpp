#pragma once

#include <optional>
#include <string>

#include "debate/backend.hpp"
#include "debate/core.hpp"

namespace debate::scripted {

enum class PolicyKind {
  concede_at_k,
  always_criticize,
  increment_scorer,
  decrement_scorer,
  constant_scorer,
  scripted_tiebreaker,
};

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view s);

struct PolicyParams {
  int k = 1;            // concede_at_k: 1-based critic call that concedes
  int start_score = 3;  // scorer policies
  int tiebreak_score = 3;
  int scale_min = 1;
  int scale_max = 5;
  int horizon = 64;  // turns to materialize for turn-indexed policies
  std::string criticism_text =
      "The score does not hold up; the rationale overlooks clear weaknesses in the text.";
};

/// Materializes a deterministic rule list for the requested policy kind.
/// Scorer policies reply "Score: <s0>" on the first call and the (clamped)
/// revised value on each later call. Throws DomainError("invalid_params")
/// on bad parameters.
backend::ScriptedPolicy make_policy(PolicyKind kind, const PolicyParams& params);

/// The clamped value a scorer policy posts at revision index j (0 = initial).
int scorer_policy_value(PolicyKind kind, const PolicyParams& params, int revision);

// ---------------------------------------------------------------------------
// Reference simulator: an independent, straight-line transcription of the
// debate protocol used as the oracle for the engine. It interprets policy
// kinds arithmetically and deliberately shares no code with the engine, the
// prompt renderer, or the reply parser.

struct ReferenceCell {
  PolicyKind scorer_kind = PolicyKind::constant_scorer;
  int scorer_start = 3;
  PolicyKind critic_kind = PolicyKind::always_criticize;
  int concede_at = 1;  // meaningful for concede_at_k
  int tiebreak_score = 3;
  int scale_min = 1;
  int scale_max = 5;
};

struct SimOutcome {
  std::optional<int> final_score;
  Termination termination = Termination::failed;
  int iterations_used = 0;

  friend bool operator==(const SimOutcome&, const SimOutcome&) = default;
};

SimOutcome reference_simulate(const ReferenceCell& cell, const DebateConfig& config);

}  // namespace debate::scripted
