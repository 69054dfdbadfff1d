#include "debate/scripted_policies.hpp"

#include <algorithm>

namespace debate::scripted {
namespace {

void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError("invalid_params", message);
}

std::string scorer_reply(int value, bool initial) {
  if (initial) {
    return "Working through the evaluation steps, the candidate earns this rating.\nScore: " +
           std::to_string(value);
  }
  return "Taking the feedback into account, the rating is revised.\nScore: " +
         std::to_string(value);
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::concede_at_k: return "concede_at_k";
    case PolicyKind::always_criticize: return "always_criticize";
    case PolicyKind::increment_scorer: return "increment_scorer";
    case PolicyKind::decrement_scorer: return "decrement_scorer";
    case PolicyKind::constant_scorer: return "constant_scorer";
    case PolicyKind::scripted_tiebreaker: return "scripted_tiebreaker";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view s) {
  if (s == "concede_at_k") return PolicyKind::concede_at_k;
  if (s == "always_criticize") return PolicyKind::always_criticize;
  if (s == "increment_scorer") return PolicyKind::increment_scorer;
  if (s == "decrement_scorer") return PolicyKind::decrement_scorer;
  if (s == "constant_scorer") return PolicyKind::constant_scorer;
  if (s == "scripted_tiebreaker") return PolicyKind::scripted_tiebreaker;
  throw DomainError("invalid_params", "unknown policy kind '" + std::string(s) + "'");
}

int scorer_policy_value(PolicyKind kind, const PolicyParams& params, int revision) {
  switch (kind) {
    case PolicyKind::increment_scorer:
      return std::min(params.scale_max, params.start_score + revision);
    case PolicyKind::decrement_scorer:
      return std::max(params.scale_min, params.start_score - revision);
    case PolicyKind::constant_scorer:
      return params.start_score;
    default:
      throw DomainError("invalid_params",
                        std::string(to_string(kind)) + " is not a scorer policy");
  }
}

backend::ScriptedPolicy make_policy(PolicyKind kind, const PolicyParams& params) {
  require(params.scale_min < params.scale_max, "degenerate scale");
  require(params.horizon >= 1, "horizon must be >= 1");

  backend::ScriptedPolicy policy;
  policy.description = std::string(to_string(kind));

  switch (kind) {
    case PolicyKind::concede_at_k: {
      require(params.k >= 1, "concede_at_k needs k >= 1");
      policy.role = Role::critic;
      policy.description += "(k=" + std::to_string(params.k) + ")";
      for (int turn = 0; turn < params.k - 1; ++turn) {
        policy.rules.push_back({turn, std::nullopt, params.criticism_text});
      }
      policy.rules.push_back({params.k - 1, std::nullopt, "NO ISSUE."});
      break;
    }
    case PolicyKind::always_criticize: {
      policy.role = Role::critic;
      policy.rules.push_back({std::nullopt, std::nullopt, params.criticism_text});
      break;
    }
    case PolicyKind::increment_scorer:
    case PolicyKind::decrement_scorer: {
      require(params.start_score >= params.scale_min && params.start_score <= params.scale_max,
              "start score outside the scale");
      policy.role = Role::scorer;
      policy.description += "(s0=" + std::to_string(params.start_score) + ")";
      for (int turn = 0; turn < params.horizon; ++turn) {
        policy.rules.push_back(
            {turn, std::nullopt, scorer_reply(scorer_policy_value(kind, params, turn), turn == 0)});
      }
      break;
    }
    case PolicyKind::constant_scorer: {
      require(params.start_score >= params.scale_min && params.start_score <= params.scale_max,
              "start score outside the scale");
      policy.role = Role::scorer;
      policy.description += "(s=" + std::to_string(params.start_score) + ")";
      policy.rules.push_back({0, std::nullopt, scorer_reply(params.start_score, true)});
      policy.rules.push_back({std::nullopt, std::nullopt, scorer_reply(params.start_score, false)});
      break;
    }
    case PolicyKind::scripted_tiebreaker: {
      require(params.tiebreak_score >= params.scale_min &&
                  params.tiebreak_score <= params.scale_max,
              "tiebreak score outside the scale");
      policy.role = Role::tiebreaker;
      policy.description += "(v=" + std::to_string(params.tiebreak_score) + ")";
      policy.rules.push_back({std::nullopt, std::nullopt,
                              "Weighing both sides of the debate log.\nFinal score: " +
                                  std::to_string(params.tiebreak_score)});
      break;
    }
  }
  return policy;
}

SimOutcome reference_simulate(const ReferenceCell& cell, const DebateConfig& config) {
  const auto clamp = [&](int v) { return std::max(cell.scale_min, std::min(cell.scale_max, v)); };
  const auto scorer_value = [&](int revision) {
    switch (cell.scorer_kind) {
      case PolicyKind::increment_scorer: return clamp(cell.scorer_start + revision);
      case PolicyKind::decrement_scorer: return clamp(cell.scorer_start - revision);
      default: return cell.scorer_start;
    }
  };
  const auto critic_concedes = [&](int call_index) {
    return cell.critic_kind == PolicyKind::concede_at_k && call_index >= cell.concede_at;
  };

  int score = scorer_value(0);
  for (int i = 1; i <= config.max_iterations; ++i) {
    if (critic_concedes(i)) {
      return SimOutcome{score, Termination::critic_conceded, i};
    }
    score = scorer_value(i);
  }
  if (config.style == DebateStyle::tie_breaker || config.style == DebateStyle::both) {
    return SimOutcome{cell.tiebreak_score, Termination::tie_broken, config.max_iterations};
  }
  return SimOutcome{score, Termination::iteration_cap, config.max_iterations};
}

}  // namespace debate::scripted
