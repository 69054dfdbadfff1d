#pragma once

#include <atomic>
#include <filesystem>

#include "debate/backend.hpp"

namespace debate::backend {

/// Wraps a backend with a content-addressed disk cache.
///
/// Key = sha256(model, params, full message list). Hits return the stored
/// reply without touching the inner backend; misses delegate and store via
/// atomic write-rename. Entries failing their checksum are evicted and
/// recomputed. Only meaningful over deterministic inner backends
/// (temperature-0 HTTP calls); do not wrap turn-stateful scripted backends.
class CachingBackend final : public Backend {
 public:
  CachingBackend(BackendPtr inner, std::filesystem::path cache_dir);

  Completion complete(const std::vector<ChatMessage>& messages,
                      const ModelParams& params) override;
  std::string id() const override;

  static std::string cache_key(const std::string& backend_id,
                               const std::vector<ChatMessage>& messages,
                               const ModelParams& params);

  long hits() const { return hits_; }
  long misses() const { return misses_; }

 private:
  std::filesystem::path entry_path(const std::string& key) const;

  BackendPtr inner_;
  std::filesystem::path cache_dir_;
  std::atomic<long> hits_{0};
  std::atomic<long> misses_{0};
};

BackendPtr with_cache(BackendPtr inner, const std::filesystem::path& cache_dir);

}  // namespace debate::backend
