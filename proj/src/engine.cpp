#include "debate/engine.hpp"

#include "debate/hashing.hpp"
#include "debate/serde.hpp"

namespace debate::engine {
namespace {

using backend::ChatMessage;

constexpr const char* kReprompt = "Reply with only the integer score.";

ChatMessage system_msg(const std::string& content) {
  return ChatMessage{ChatMessage::Kind::system, content};
}
ChatMessage user_msg(const std::string& content) {
  return ChatMessage{ChatMessage::Kind::user, content};
}
ChatMessage assistant_msg(const std::string& content) {
  return ChatMessage{ChatMessage::Kind::assistant, content};
}

bool has_tiebreaker(const DebateConfig& config) {
  return config.style == DebateStyle::tie_breaker || config.style == DebateStyle::both;
}

}  // namespace

std::string config_hash(const DebateConfig& config) {
  return sha256_hex(nlohmann::json(config).dump()).substr(0, 12);
}

Agents build_agents(const DebateConfig& config, const prompts::PromptPack& pack,
                    const BackendSet& backends) {
  Agents agents;
  agents.scorer = AgentHandle{Role::scorer, pack.system_messages().scorer, backends.scorer,
                              config.model_params};
  agents.critic =
      AgentHandle{Role::critic, pack.critic_system_message(config.persona, config.prompt_variant),
                  backends.critic, config.model_params};
  if (has_tiebreaker(config)) {
    agents.tiebreaker = AgentHandle{Role::tiebreaker, pack.system_messages().tiebreaker,
                                    backends.tiebreaker, config.model_params};
  }
  if (config.commander_mode == CommanderMode::llm) {
    agents.commander = AgentHandle{Role::commander, pack.system_messages().commander,
                                   backends.commander, config.model_params};
  }
  return agents;
}

Transcript::Transcript(std::string transcript_id, std::string item_id, std::string aspect,
                       DebateConfig config)
    : transcript_id_(std::move(transcript_id)),
      item_id_(std::move(item_id)),
      aspect_(std::move(aspect)),
      config_(std::move(config)) {}

void Transcript::append(Role role, Direction direction, int iteration, std::string content,
                        std::optional<TokenUsage> usage) {
  if (sealed_) throw std::logic_error("appending to a sealed transcript");
  if (!entries_.empty() && iteration < entries_.back().iteration) {
    throw std::logic_error("transcript iteration index went backwards");
  }
  TranscriptEntry entry;
  entry.seq = static_cast<int>(entries_.size()) + 1;
  entry.iteration = iteration;
  entry.role = role;
  entry.direction = direction;
  entry.content = std::move(content);
  entry.timestamp = iso_utc_now();
  entry.token_usage = usage;
  entries_.push_back(std::move(entry));
}

void Transcript::seal() {
  sealed_ = true;
}

const TranscriptEntry* Transcript::last_reply(Role role) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->role == role && it->direction == Direction::reply) return &*it;
  }
  return nullptr;
}

const TranscriptEntry* Transcript::initial_prompt() const {
  for (const auto& entry : entries_) {
    if (entry.role == Role::scorer && entry.direction == Direction::request) return &entry;
  }
  return nullptr;
}

int Transcript::reply_count(Role role) const {
  int count = 0;
  for (const auto& entry : entries_) {
    if (entry.role == role && entry.direction == Direction::reply) ++count;
  }
  return count;
}

void to_json(nlohmann::json& j, const Transcript& t) {
  j = nlohmann::json{{"transcript_id", t.transcript_id_},
                     {"item_id", t.item_id_},
                     {"aspect", t.aspect_},
                     {"config", t.config_},
                     {"entries", t.entries_},
                     {"sealed", t.sealed_}};
}

void from_json(const nlohmann::json& j, Transcript& t) {
  j.at("transcript_id").get_to(t.transcript_id_);
  j.at("item_id").get_to(t.item_id_);
  j.at("aspect").get_to(t.aspect_);
  j.at("config").get_to(t.config_);
  j.at("entries").get_to(t.entries_);
  t.sealed_ = j.value("sealed", false);
}

std::vector<ChatMessage> commander_route(const prompts::PromptPack& pack, const TaskSpec& task,
                                         const AspectSpec& aspect, const EvaluationItem& item,
                                         const DebateConfig& config, const Agents& agents,
                                         const Transcript& transcript, Role to) {
  switch (to) {
    case Role::critic: {
      const TranscriptEntry* prompt = transcript.initial_prompt();
      const TranscriptEntry* scorer_reply = transcript.last_reply(Role::scorer);
      if (!prompt || !scorer_reply) {
        throw DomainError("protocol_violation", "routing to the Critic before any scoring");
      }
      return {system_msg(agents.critic.system_message),
              user_msg(prompts::render_critic_forward(pack, prompt->content,
                                                      scorer_reply->content))};
    }
    case Role::scorer: {
      const TranscriptEntry* feedback = transcript.last_reply(Role::critic);
      if (!feedback) {
        throw DomainError("protocol_violation",
                          "routing a revision to the Scorer with no Critic feedback");
      }
      // The Scorer keeps its own conversation thread; the Commander
      // reconstructs it and appends the new revision request.
      std::vector<ChatMessage> messages{system_msg(agents.scorer.system_message)};
      for (const auto& entry : transcript.entries()) {
        if (entry.role != Role::scorer) continue;
        messages.push_back(entry.direction == Direction::request ? user_msg(entry.content)
                                                                 : assistant_msg(entry.content));
      }
      messages.push_back(user_msg(prompts::render_revision_request(
          pack, feedback->content, aspect.scale_min, aspect.scale_max)));
      return messages;
    }
    case Role::tiebreaker: {
      if (!agents.tiebreaker) {
        throw DomainError("protocol_violation", "no tie-breaker agent under style " +
                                                    std::string(to_string(config.style)));
      }
      const int critic_replies = transcript.reply_count(Role::critic);
      if (critic_replies < config.max_iterations) {
        throw DomainError("protocol_violation",
                          "tie-breaker invoked before the debate loop was exhausted (" +
                              std::to_string(critic_replies) + "/" +
                              std::to_string(config.max_iterations) + " iterations)");
      }
      return {system_msg(agents.tiebreaker->system_message),
              user_msg(prompts::render_tiebreaker_prompt(pack, task, aspect, item,
                                                         transcript.entries()))};
    }
    case Role::commander:
      break;
  }
  throw DomainError("protocol_violation", "commander cannot route to itself");
}

namespace {

struct DebateRun {
  const prompts::PromptPack& pack;
  const TaskSpec& task;
  const AspectSpec& aspect;
  const EvaluationItem& item;
  const DebateConfig& config;
  const Agents& agents;
  const DebateOptions& options;
  Transcript transcript;

  std::string call(const AgentHandle& agent, const std::vector<ChatMessage>& messages,
                   int iteration) {
    transcript.append(agent.role, Direction::request, iteration, messages.back().content);
    backend::Completion completion;
    try {
      completion = agent.backend->complete(messages, agent.params);
    } catch (const backend::PolicyExhaustedError&) {
      throw;  // a test bug, not a debate outcome
    } catch (const backend::BackendError& ex) {
      transcript.seal();
      throw DebateAborted(ex.code(), ex.what(), std::move(transcript));
    }
    transcript.append(agent.role, Direction::reply, iteration, completion.text, completion.usage);
    return completion.text;
  }

  // One bounded reprompt on parse failure, per the parsing contract.
  std::optional<int> parse_with_reprompt(const AgentHandle& agent,
                                         std::vector<ChatMessage> messages, std::string reply,
                                         int iteration, std::string* error) {
    auto extraction = parsing::extract_score(reply, aspect.scale_min, aspect.scale_max);
    if (extraction) return extraction.value;
    messages.push_back(assistant_msg(reply));
    messages.push_back(user_msg(kReprompt));
    const std::string retry = call(agent, messages, iteration);
    extraction = parsing::extract_score(retry, aspect.scale_min, aspect.scale_max);
    if (extraction) return extraction.value;
    *error = std::string(parsing::to_string(extraction.code)) + ": " + extraction.detail;
    return std::nullopt;
  }

  DebateResult failed(const std::string& stage, const std::string& detail, int iterations_used) {
    transcript.seal();
    DebateResult result;
    result.outcome.termination = Termination::failed;
    result.outcome.error = stage + ": " + detail;
    result.outcome.iterations_used = iterations_used;
    result.outcome.transcript_id = transcript.transcript_id();
    result.transcript = std::move(transcript);
    check_outcome(result.outcome, config);
    return result;
  }

  DebateResult finished(Termination termination, int score, int iterations_used) {
    transcript.seal();
    DebateResult result;
    result.outcome.final_score = make_score(score, aspect);
    result.outcome.termination = termination;
    result.outcome.iterations_used = iterations_used;
    result.outcome.transcript_id = transcript.transcript_id();
    result.transcript = std::move(transcript);
    check_outcome(result.outcome, config);
    return result;
  }
};

}  // namespace

DebateResult run_debate(const prompts::PromptPack& pack, const TaskSpec& task,
                        const AspectSpec& aspect, const EvaluationItem& item,
                        const DebateConfig& config, const Agents& agents,
                        const DebateOptions& options) {
  if (const auto issues = validate_config(config); !issues.empty()) {
    throw DomainError("invalid_config", issues.front().code + ": " + issues.front().message);
  }

  const std::string id = item.item_id + ":" + aspect.name + ":" + config_hash(config);
  DebateRun run{pack,   task,   aspect,  item,
                config, agents, options, Transcript(id, item.item_id, aspect.name, config)};

  // Prompt formulation: deterministic rendering, or a Commander model call
  // in llm mode.
  std::string prompt =
      prompts::render_scoring_prompt(pack, task, aspect, item, options.scoring_template_id);
  if (config.commander_mode == CommanderMode::llm && agents.commander) {
    const std::string request =
        "Formulate the evaluation prompt for the Scorer from the material below. "
        "Reply with the prompt text only.\n\n" +
        prompt;
    prompt = run.call(*agents.commander,
                      {system_msg(agents.commander->system_message), user_msg(request)}, 0);
  }

  // Initial scoring (iteration 0).
  std::vector<ChatMessage> scorer_thread{system_msg(agents.scorer.system_message),
                                         user_msg(prompt)};
  std::string reply = run.call(agents.scorer, scorer_thread, 0);
  std::string parse_error;
  auto score = run.parse_with_reprompt(agents.scorer, scorer_thread, reply, 0, &parse_error);
  if (!score) return run.failed("scoring_failed", parse_error, 0);
  int current_score = *score;

  // Debate loop.
  for (int i = 1; i <= config.max_iterations; ++i) {
    const auto critic_messages = commander_route(pack, task, aspect, item, config, agents,
                                                 run.transcript, Role::critic);
    const std::string feedback = run.call(agents.critic, critic_messages, i);

    if (const auto span = parsing::find_concession(feedback, options.concession_mode)) {
      auto result = run.finished(Termination::critic_conceded, current_score, i);
      result.concession_span = span;
      result.concession_excerpt = feedback.substr(span->first, span->second - span->first);
      return result;
    }

    const auto revision_messages = commander_route(pack, task, aspect, item, config, agents,
                                                   run.transcript, Role::scorer);
    reply = run.call(agents.scorer, revision_messages, i);
    score = run.parse_with_reprompt(agents.scorer, revision_messages, reply, i, &parse_error);
    if (!score) return run.failed("revision_failed", parse_error, i);
    current_score = *score;
  }

  if (agents.tiebreaker) {
    const auto tb_messages = commander_route(pack, task, aspect, item, config, agents,
                                             run.transcript, Role::tiebreaker);
    const std::string verdict =
        run.call(*agents.tiebreaker, tb_messages, config.max_iterations);
    const auto tb_score = run.parse_with_reprompt(*agents.tiebreaker, tb_messages, verdict,
                                                  config.max_iterations, &parse_error);
    if (!tb_score) return run.failed("tiebreak_failed", parse_error, config.max_iterations);
    return run.finished(Termination::tie_broken, *tb_score, config.max_iterations);
  }
  return run.finished(Termination::iteration_cap, current_score, config.max_iterations);
}

}  // namespace debate::engine
