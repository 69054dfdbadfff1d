#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "debate/cache_backend.hpp"
#include "debate/http_backend.hpp"
#include "debate/scripted_policies.hpp"
#include "support.hpp"
#include "wire_server.hpp"

using namespace debate;
using namespace debate::backend;

namespace {

std::vector<ChatMessage> simple_request(const std::string& user = "rate this") {
  return {{ChatMessage::Kind::system, "system message"}, {ChatMessage::Kind::user, user}};
}

// Deterministic function-of-input backend (no turn state), for cache tests.
class EchoBackend final : public Backend {
 public:
  Completion complete(const std::vector<ChatMessage>& messages, const ModelParams& params) override {
    check_messages(messages);
    ++calls_;
    return Completion{"echo: " + messages.back().content + " @" +
                          std::to_string(params.temperature),
                      TokenUsage{7, 3}, 0};
  }
  std::string id() const override { return "echo"; }
  int calls() const { return calls_.load(); }

 private:
  std::atomic<int> calls_{0};
};

}  // namespace

TEST_CASE("scripted backend replays its rules by turn") {
  ScriptedPolicy policy;
  policy.role = Role::critic;
  policy.description = "concede-on-first";
  policy.rules.push_back({0, std::nullopt, "NO ISSUE."});
  ScriptedBackend backend(policy);
  CHECK(backend.complete(simple_request(), {}).text == "NO ISSUE.");
  CHECK_THROWS_AS(backend.complete(simple_request(), {}), PolicyExhaustedError);
}

TEST_CASE("scripted backend can match on request content") {
  ScriptedPolicy policy;
  policy.role = Role::scorer;
  policy.rules.push_back({std::nullopt, "reconsider", "Score: 4"});
  policy.rules.push_back({std::nullopt, std::nullopt, "Score: 2"});
  ScriptedBackend backend(policy);
  CHECK(backend.complete(simple_request("please rate"), {}).text == "Score: 2");
  CHECK(backend.complete(simple_request("please reconsider the rating"), {}).text == "Score: 4");
}

TEST_CASE("scripted backend rejects malformed message lists") {
  ScriptedBackend backend(ScriptedPolicy{});
  CHECK_THROWS_AS(backend.complete({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(backend.complete({{ChatMessage::Kind::user, "no system first"}}, {}),
                  std::invalid_argument);
}

TEST_CASE("scripted replay is deterministic over random policies") {
  std::mt19937 rng(4242);
  for (int trial = 0; trial < 50; ++trial) {
    ScriptedPolicy policy;
    policy.description = "random-" + std::to_string(trial);
    const int turns = 1 + static_cast<int>(rng() % 8);
    for (int t = 0; t < turns; ++t) {
      policy.rules.push_back({t, std::nullopt, "reply-" + std::to_string(rng() % 1000)});
    }
    ScriptedBackend a(policy);
    ScriptedBackend b(policy);
    for (int t = 0; t < turns; ++t) {
      const auto request = simple_request("turn " + std::to_string(t));
      CHECK(a.complete(request, {}).text == b.complete(request, {}).text);
    }
  }
}

TEST_CASE("make_policy materializations") {
  using namespace debate::scripted;
  PolicyParams params;
  params.k = 1;
  auto concede_now = make_policy(PolicyKind::concede_at_k, params);
  ScriptedBackend critic(concede_now);
  CHECK(critic.complete(simple_request(), {}).text == "NO ISSUE.");

  params.k = 0;
  CHECK_THROWS_AS(make_policy(PolicyKind::concede_at_k, params), DomainError);
  params.k = 1;

  params.start_score = 4;
  ScriptedBackend scorer(make_policy(PolicyKind::increment_scorer, params));
  CHECK(scorer.complete(simple_request(), {}).text.find("Score: 4") != std::string::npos);
  scorer.complete(simple_request(), {});  // revision 1 -> 5
  // Revision 2 clamps at the top of the scale.
  CHECK(scorer.complete(simple_request(), {}).text.find("Score: 5") != std::string::npos);
  CHECK(scorer_policy_value(PolicyKind::increment_scorer, params, 3) == 5);

  params.start_score = 9;
  CHECK_THROWS_AS(make_policy(PolicyKind::constant_scorer, params), DomainError);
}

TEST_CASE("cache: identical calls hit without touching the inner backend") {
  const auto dir = std::filesystem::temp_directory_path() / "debate_cache_test_hit";
  std::filesystem::remove_all(dir);
  auto inner = std::make_shared<EchoBackend>();
  CachingBackend cached(inner, dir);

  const auto first = cached.complete(simple_request(), {});
  CHECK(inner->calls() == 1);
  const auto second = cached.complete(simple_request(), {});
  CHECK(inner->calls() == 1);  // zero new network calls
  CHECK(first.text == second.text);
  CHECK(second.usage.has_value());
  CHECK(cached.hits() == 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cache: params are part of the key") {
  const auto dir = std::filesystem::temp_directory_path() / "debate_cache_test_keys";
  std::filesystem::remove_all(dir);
  auto inner = std::make_shared<EchoBackend>();
  CachingBackend cached(inner, dir);

  ModelParams cold;
  ModelParams warm;
  warm.temperature = 0.7;
  cached.complete(simple_request(), cold);
  cached.complete(simple_request(), warm);
  CHECK(inner->calls() == 2);
  CHECK(CachingBackend::cache_key("echo", simple_request(), cold) !=
        CachingBackend::cache_key("echo", simple_request(), warm));
  std::filesystem::remove_all(dir);
}

TEST_CASE("cache: corrupt entries are evicted and recomputed") {
  const auto dir = std::filesystem::temp_directory_path() / "debate_cache_test_corrupt";
  std::filesystem::remove_all(dir);
  auto inner = std::make_shared<EchoBackend>();
  CachingBackend cached(inner, dir);

  const auto good = cached.complete(simple_request(), {});
  const auto key = CachingBackend::cache_key("echo", simple_request(), {});
  const auto entry = dir / key.substr(0, 2) / (key + ".json");
  REQUIRE(std::filesystem::exists(entry));
  {
    std::ifstream in(entry);
    nlohmann::json j = nlohmann::json::parse(in);
    j["reply"] = "tampered reply";  // checksum now wrong
    std::ofstream out(entry);
    out << j.dump();
  }
  const auto recomputed = cached.complete(simple_request(), {});
  CHECK(recomputed.text == good.text);
  CHECK(inner->calls() == 2);
  // The evicted entry was replaced with a valid one.
  const auto after = cached.complete(simple_request(), {});
  CHECK(after.text == good.text);
  CHECK(inner->calls() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cache transparency: outcomes with and without the layer are identical") {
  const auto dir = std::filesystem::temp_directory_path() / "debate_cache_test_transparent";
  std::filesystem::remove_all(dir);
  auto bare = std::make_shared<EchoBackend>();
  auto layered = with_cache(std::make_shared<EchoBackend>(), dir);
  std::mt19937 rng(5);
  for (int i = 0; i < 40; ++i) {
    const auto request = simple_request("request " + std::to_string(rng() % 10));
    CHECK(bare->complete(request, {}).text == layered->complete(request, {}).text);
  }
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------------------
// Wire conformance against a local server.

using testwire::WireServer;

TEST_CASE("http backend posts the default params and system-first messages") {
  WireServer server;
  HttpBackend backend(server.options());

  ModelParams params;
  params.model_name = "gpt-4";
  const auto completion = backend.complete(simple_request("evaluate the summary"), params);
  CHECK(completion.text == "Score: 4");
  REQUIRE(completion.usage.has_value());
  CHECK(completion.usage->prompt_tokens == 12);

  REQUIRE(server.bodies.size() == 1);
  const auto body = nlohmann::json::parse(server.bodies[0]);
  CHECK(body["model"] == "gpt-4");
  CHECK(body["temperature"] == 0.0);
  CHECK(body["top_p"] == 1.0);
  CHECK(body["frequency_penalty"] == 0.0);
  CHECK(body["presence_penalty"] == 0.0);
  REQUIRE(body["messages"].is_array());
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body["messages"][1]["content"] == "evaluate the summary");
}

TEST_CASE("http backend retries 429 with bounded backoff and records the count") {
  WireServer server;
  server.status_plan = {429, 429};
  HttpBackend backend(server.options());

  const auto completion = backend.complete(simple_request(), {});
  CHECK(completion.text == "Score: 4");
  CHECK(completion.retries == 2);
  CHECK(server.bodies.size() == 3);
}

TEST_CASE("http backend gives up after bounded attempts on persistent 429") {
  WireServer server;
  server.status_plan = {429, 429, 429, 429, 429, 429, 429};
  auto opts = server.options();
  opts.retry.max_attempts = 3;
  HttpBackend backend(opts);
  CHECK_THROWS_AS(backend.complete(simple_request(), {}), RateLimitedError);
  CHECK(server.bodies.size() == 3);
}

TEST_CASE("http backend never retries a plain 4xx") {
  WireServer server;
  server.status_plan = {400};
  HttpBackend backend(server.options());
  CHECK_THROWS_AS(backend.complete(simple_request(), {}), ApiError);
  CHECK(server.bodies.size() == 1);
}

TEST_CASE("http backend flags malformed responses") {
  httplib::Server bad;
  bad.Post("/v1/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"unexpected\": true}", "application/json");
  });
  const int port = bad.bind_to_any_port("127.0.0.1");
  std::thread t([&] { bad.listen_after_bind(); });
  bad.wait_until_ready();

  HttpBackendOptions opts;
  opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  opts.retry.base_delay = std::chrono::milliseconds(1);
  HttpBackend backend(opts);
  CHECK_THROWS_AS(backend.complete(simple_request(), {}), MalformedResponseError);
  bad.stop();
  t.join();
}

TEST_CASE("http backend throttles request rate inside the window") {
  WireServer server;
  auto opts = server.options();
  opts.requests_per_minute = 2;
  opts.throttle_window = std::chrono::milliseconds(150);
  HttpBackend backend(opts);

  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) backend.complete(simple_request(), {});
  const auto elapsed = std::chrono::steady_clock::now() - start;
  // 5 requests at 2 per 150 ms window needs at least one full window wait.
  CHECK(elapsed >= std::chrono::milliseconds(150));
  CHECK(server.bodies.size() == 5);
}

TEST_CASE("http backend respects the max-in-flight limit") {
  httplib::Server slow;
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  slow.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++active;
    int expected = peak.load();
    while (now > expected && !peak.compare_exchange_weak(expected, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --active;
    nlohmann::json reply{
        {"choices", {{{"message", {{"role", "assistant"}, {"content", "ok"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = slow.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { slow.listen_after_bind(); });
  slow.wait_until_ready();

  HttpBackendOptions opts;
  opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  opts.max_in_flight = 2;
  opts.retry.base_delay = std::chrono::milliseconds(1);
  HttpBackend backend(opts);

  std::vector<std::thread> callers;
  for (int i = 0; i < 6; ++i) {
    callers.emplace_back([&] { backend.complete(simple_request(), {}); });
  }
  for (auto& c : callers) c.join();
  CHECK(peak.load() <= 2);
  slow.stop();
  server_thread.join();
}
