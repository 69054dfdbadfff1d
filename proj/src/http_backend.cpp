#include "debate/http_backend.hpp"

#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "debate/httplib_config.hpp"

namespace debate::backend {
namespace {

using nlohmann::json;

constexpr const char* kDefaultBaseUrl = "https://api.openai.com/v1";

std::string env_or(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value && *value ? value : fallback;
}

// Splits "https://host:port/prefix" into the client origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = base_url.find('/', host_start);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

}  // namespace

struct HttpBackend::Impl {
  HttpBackendOptions options;
  std::string origin;
  std::string path_prefix;

  std::mutex mutex;
  std::condition_variable slot_free;
  int in_flight = 0;
  std::deque<std::chrono::steady_clock::time_point> recent;
  std::mt19937_64 rng{std::random_device{}()};

  void acquire_slot() {
    std::unique_lock<std::mutex> lock(mutex);
    slot_free.wait(lock, [&] { return in_flight < options.max_in_flight; });
    ++in_flight;
    if (options.requests_per_minute > 0) {
      const auto window = options.throttle_window;
      for (;;) {
        const auto now = std::chrono::steady_clock::now();
        while (!recent.empty() && now - recent.front() > window) recent.pop_front();
        if (static_cast<int>(recent.size()) < options.requests_per_minute) break;
        const auto wake = recent.front() + window;
        lock.unlock();
        std::this_thread::sleep_until(wake);
        lock.lock();
      }
      recent.push_back(std::chrono::steady_clock::now());
    }
  }

  void release_slot() {
    std::lock_guard<std::mutex> lock(mutex);
    --in_flight;
    slot_free.notify_one();
  }

  std::chrono::milliseconds backoff_delay(int attempt) {
    const double exp = options.retry.base_delay.count() *
                       std::pow(options.retry.factor, static_cast<double>(attempt));
    auto capped = std::chrono::milliseconds(
        static_cast<long long>(std::min(exp, static_cast<double>(options.retry.max_delay.count()))));
    if (!options.retry.jitter) return capped;
    std::lock_guard<std::mutex> lock(mutex);
    std::uniform_int_distribution<long long> dist(0, capped.count());
    return std::chrono::milliseconds(dist(rng));
  }
};

HttpBackend::HttpBackend(HttpBackendOptions options) : impl_(std::make_unique<Impl>()) {
  if (options.base_url.empty()) options.base_url = env_or("DEBATE_BASE_URL", kDefaultBaseUrl);
  if (options.api_key.empty()) options.api_key = env_or("DEBATE_API_KEY", "");
  impl_->options = std::move(options);
  std::tie(impl_->origin, impl_->path_prefix) = split_base_url(impl_->options.base_url);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(const std::vector<ChatMessage>& messages,
                                      const ModelParams& params) {
  json body;
  body["model"] = params.model_name;
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  body["messages"] = std::move(msgs);
  body["temperature"] = params.temperature;
  body["top_p"] = params.top_p;
  body["frequency_penalty"] = params.frequency_penalty;
  body["presence_penalty"] = params.presence_penalty;
  if (params.max_output_tokens) body["max_tokens"] = *params.max_output_tokens;
  return body.dump();
}

Completion HttpBackend::complete(const std::vector<ChatMessage>& messages,
                                 const ModelParams& params) {
  check_messages(messages);
  const std::string body = request_body(messages, params);
  const std::string path = impl_->path_prefix + "/chat/completions";
  const auto& retry = impl_->options.retry;

  impl_->acquire_slot();
  struct SlotGuard {
    Impl* impl;
    ~SlotGuard() { impl->release_slot(); }
  } guard{impl_.get()};

  std::string last_error;
  for (int attempt = 0; attempt < retry.max_attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(impl_->backoff_delay(attempt - 1));

    httplib::Client client(impl_->origin);
    client.set_connection_timeout(impl_->options.timeout);
    client.set_read_timeout(impl_->options.timeout);
    httplib::Headers headers;
    if (!impl_->options.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + impl_->options.api_key);
    }

    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      throw ApiError(res->status, "HTTP " + std::to_string(res->status) + ": " + res->body);
    }

    json payload;
    try {
      payload = json::parse(res->body);
    } catch (const json::exception& ex) {
      throw MalformedResponseError(std::string("response is not JSON: ") + ex.what());
    }
    if (!payload.contains("choices") || !payload["choices"].is_array() ||
        payload["choices"].empty() || !payload["choices"][0].contains("message")) {
      throw MalformedResponseError("response lacks choices[0].message");
    }
    Completion completion;
    completion.retries = attempt;
    completion.text = payload["choices"][0]["message"].value("content", "");
    if (payload.contains("usage") && payload["usage"].is_object()) {
      TokenUsage usage;
      usage.prompt_tokens = payload["usage"].value("prompt_tokens", 0L);
      usage.completion_tokens = payload["usage"].value("completion_tokens", 0L);
      completion.usage = usage;
    }
    return completion;
  }

  if (last_error.rfind("HTTP 429", 0) == 0) {
    throw RateLimitedError("rate limited after " + std::to_string(retry.max_attempts) +
                           " attempts");
  }
  throw TransportError("gave up after " + std::to_string(retry.max_attempts) +
                       " attempts; last error: " + last_error);
}

std::string HttpBackend::id() const {
  return "http:" + impl_->options.base_url;
}

}  // namespace debate::backend
