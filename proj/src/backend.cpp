#include "debate/backend.hpp"

#include <mutex>

namespace debate::backend {

std::string_view to_string(ChatMessage::Kind role) {
  switch (role) {
    case ChatMessage::Kind::system: return "system";
    case ChatMessage::Kind::user: return "user";
    case ChatMessage::Kind::assistant: return "assistant";
  }
  return "?";
}

void check_messages(const std::vector<ChatMessage>& messages) {
  if (messages.empty()) throw std::invalid_argument("complete() needs at least one message");
  if (messages.front().role != ChatMessage::Kind::system)
    throw std::invalid_argument("the first message must be the system message");
}

struct ScriptedBackend::Impl {
  ScriptedPolicy policy;
  int calls = 0;
  std::mutex mutex;
};

ScriptedBackend::ScriptedBackend(ScriptedPolicy policy) : impl_(std::make_unique<Impl>()) {
  impl_->policy = std::move(policy);
}

ScriptedBackend::~ScriptedBackend() = default;

Completion ScriptedBackend::complete(const std::vector<ChatMessage>& messages,
                                     const ModelParams&) {
  check_messages(messages);
  std::lock_guard<std::mutex> lock(impl_->mutex);
  const int turn = impl_->calls;

  std::string last_user;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == ChatMessage::Kind::user) {
      last_user = it->content;
      break;
    }
  }

  for (const auto& rule : impl_->policy.rules) {
    if (rule.turn && *rule.turn != turn) continue;
    if (rule.contains && last_user.find(*rule.contains) == std::string::npos) continue;
    ++impl_->calls;
    return Completion{rule.reply, std::nullopt, 0};
  }
  throw PolicyExhaustedError("scripted policy '" + impl_->policy.description + "' (role " +
                             std::string(debate::to_string(impl_->policy.role)) +
                             ") has no rule for turn " + std::to_string(turn));
}

std::string ScriptedBackend::id() const {
  return "scripted:" + impl_->policy.description;
}

int ScriptedBackend::calls() const {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  return impl_->calls;
}

void ScriptedBackend::reset() {
  std::lock_guard<std::mutex> lock(impl_->mutex);
  impl_->calls = 0;
}

}  // namespace debate::backend
