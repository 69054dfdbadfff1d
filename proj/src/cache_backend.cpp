#include "debate/cache_backend.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "debate/hashing.hpp"
#include "debate/serde.hpp"

namespace debate::backend {
namespace {

using nlohmann::json;

std::atomic<unsigned> tmp_counter{0};

}  // namespace

CachingBackend::CachingBackend(BackendPtr inner, std::filesystem::path cache_dir)
    : inner_(std::move(inner)), cache_dir_(std::move(cache_dir)) {
  std::filesystem::create_directories(cache_dir_);
}

std::string CachingBackend::cache_key(const std::string& backend_id,
                                      const std::vector<ChatMessage>& messages,
                                      const ModelParams& params) {
  json key;
  key["backend"] = backend_id;
  key["params"] = params;
  json msgs = json::array();
  for (const auto& m : messages) {
    msgs.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  key["messages"] = std::move(msgs);
  return sha256_hex(key.dump());
}

std::filesystem::path CachingBackend::entry_path(const std::string& key) const {
  return cache_dir_ / key.substr(0, 2) / (key + ".json");
}

Completion CachingBackend::complete(const std::vector<ChatMessage>& messages,
                                    const ModelParams& params) {
  const std::string key = cache_key(inner_->id(), messages, params);
  const auto path = entry_path(key);

  if (std::filesystem::exists(path)) {
    try {
      std::ifstream in(path);
      const json entry = json::parse(in);
      const std::string reply = entry.at("reply").get<std::string>();
      if (entry.at("checksum").get<std::string>() == sha256_hex(reply)) {
        Completion completion;
        completion.text = reply;
        if (entry.contains("usage") && !entry["usage"].is_null()) {
          completion.usage = entry["usage"].get<TokenUsage>();
        }
        ++hits_;
        return completion;
      }
    } catch (const std::exception&) {
      // Fall through: corrupt entry, treat as a miss.
    }
    std::error_code ec;
    std::filesystem::remove(path, ec);
  }

  ++misses_;
  Completion completion = inner_->complete(messages, params);

  json entry;
  entry["request_hash"] = key;
  entry["reply"] = completion.text;
  entry["usage"] = completion.usage ? json(*completion.usage) : json(nullptr);
  entry["timestamp"] = iso_utc_now();
  entry["checksum"] = sha256_hex(completion.text);

  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.parent_path() /
                   (key + ".tmp." + std::to_string(::getpid()) + "." +
                    std::to_string(tmp_counter.fetch_add(1)));
  {
    std::ofstream out(tmp);
    out << entry.dump();
  }
  std::filesystem::rename(tmp, path);
  return completion;
}

std::string CachingBackend::id() const {
  return inner_->id();
}

BackendPtr with_cache(BackendPtr inner, const std::filesystem::path& cache_dir) {
  return std::make_shared<CachingBackend>(std::move(inner), cache_dir);
}

}  // namespace debate::backend
