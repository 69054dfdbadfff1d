#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "debate/core.hpp"

namespace debate::backend {

struct ChatMessage {
  enum class Kind { system, user, assistant };
  Kind role = Kind::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

std::string_view to_string(ChatMessage::Kind role);

struct Completion {
  std::string text;
  std::optional<TokenUsage> usage;
  int retries = 0;
};

class BackendError : public std::runtime_error {
 public:
  BackendError(std::string code, const std::string& message, bool retryable)
      : std::runtime_error(message), code_(std::move(code)), retryable_(retryable) {}
  const std::string& code() const { return code_; }
  bool retryable() const { return retryable_; }

 private:
  std::string code_;
  bool retryable_;
};

struct TransportError : BackendError {
  explicit TransportError(const std::string& message)
      : BackendError("transport_error", message, true) {}
};

struct RateLimitedError : BackendError {
  explicit RateLimitedError(const std::string& message)
      : BackendError("rate_limited", message, true) {}
};

struct MalformedResponseError : BackendError {
  explicit MalformedResponseError(const std::string& message)
      : BackendError("malformed_response", message, false) {}
};

struct ApiError : BackendError {
  ApiError(int status, const std::string& message)
      : BackendError("api_error", message, false), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct PolicyExhaustedError : BackendError {
  explicit PolicyExhaustedError(const std::string& message)
      : BackendError("policy_exhausted", message, false) {}
};

/// "Send a message list, get a completion." Implementations must be safe to
/// call from multiple threads; the scripted backend serializes internally.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Precondition: messages non-empty and system-first.
  virtual Completion complete(const std::vector<ChatMessage>& messages,
                              const ModelParams& params) = 0;
  virtual std::string id() const = 0;
};

using BackendPtr = std::shared_ptr<Backend>;

// ---------------------------------------------------------------------------
// Scripted backend: the deterministic oracle-side implementation.

struct ScriptedPolicy {
  struct Rule {
    std::optional<int> turn;              // match a specific 0-based call index
    std::optional<std::string> contains;  // match when the last user message contains this
    std::string reply;
  };

  Role role = Role::scorer;
  std::vector<Rule> rules;  // first matching rule wins
  std::string description;
};

/// Replays a ScriptedPolicy: reply = first rule matching (turn index, last
/// request). Throws PolicyExhaustedError when no rule matches — a test bug.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(ScriptedPolicy policy);
  ~ScriptedBackend() override;

  Completion complete(const std::vector<ChatMessage>& messages,
                      const ModelParams& params) override;
  std::string id() const override;

  int calls() const;
  void reset();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

void check_messages(const std::vector<ChatMessage>& messages);

}  // namespace debate::backend
