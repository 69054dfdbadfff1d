#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "debate/backend.hpp"

namespace debate::backend {

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{1000};
  double factor = 2.0;
  std::chrono::milliseconds max_delay{30000};  // jitter ceiling
  bool jitter = true;
};

struct HttpBackendOptions {
  std::string base_url;  // empty: DEBATE_BASE_URL, else the OpenAI default
  std::string api_key;   // empty: DEBATE_API_KEY
  RetryPolicy retry;
  int max_in_flight = 4;
  int requests_per_minute = 0;  // 0 = unthrottled
  std::chrono::milliseconds throttle_window{60000};
  std::chrono::seconds timeout{120};
};

/// OpenAI-compatible chat-completions client.
///
/// POSTs {base_url}/chat/completions with model, messages, temperature,
/// top_p, frequency_penalty and presence_penalty; reads
/// choices[0].message.content and usage. Retries transport errors, 429 and
/// 5xx with exponential backoff and full jitter; other 4xx fail immediately.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options = {});
  ~HttpBackend() override;

  Completion complete(const std::vector<ChatMessage>& messages,
                      const ModelParams& params) override;
  std::string id() const override;

  /// The exact JSON body complete() would post (used by wire tests).
  static std::string request_body(const std::vector<ChatMessage>& messages,
                                  const ModelParams& params);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace debate::backend
