#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "debate/core.hpp"

namespace debate::data {

class DatasetError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Declares the expected shape of a benchmark: task, aspects with scales,
/// and the group x item grid the loader enforces.
struct DatasetManifest {
  std::string dataset_id;
  TaskSpec task;
  std::vector<AspectSpec> aspects;
  int expected_groups = 0;
  int expected_items_per_group = 0;
  std::vector<std::string> correlation_convention;  // e.g. {"spearman", "kendall"}

  const AspectSpec& aspect(std::string_view name) const;
  bool has_aspect(std::string_view name) const;

  static DatasetManifest load(const std::filesystem::path& path);
};

/// Reads canonical line-delimited records:
///   {"item_id", "group_id", "system_id", "context": [{"label","text"}],
///    "human": {aspect: real}}
/// and enforces the manifest: exact counts, uniform groups, every aspect
/// scored on every item, scores within the (real-extended) scale.
std::vector<EvaluationItem> load_dataset(const std::filesystem::path& path,
                                         const DatasetManifest& manifest);

/// Selects whole groups, deterministically under `seed`. Never splits a
/// group: correlations need complete groups.
std::vector<EvaluationItem> subsample(const std::vector<EvaluationItem>& items, int n_groups,
                                      std::uint64_t seed);

/// Deterministic synthetic dataset matching the manifest's shape; lets the
/// whole pipeline run without redistributing benchmark data.
std::vector<EvaluationItem> make_synthetic(const DatasetManifest& manifest, std::uint64_t seed);

void write_jsonl(const std::filesystem::path& path, const std::vector<EvaluationItem>& items);

enum class Pooling { mean, median };
Pooling parse_pooling(std::string_view s);

struct ConvertStats {
  int items = 0;
  int groups = 0;
  std::string input_sha256;
};

/// SummEval converter: expects the upstream aligned annotation file (one
/// JSON record per line with id, model_id, text, decoded and
/// expert_annotations) and emits canonical records with pooled expert
/// scores. Provenance (input hash, pooling) lands in
/// "<output>.provenance.json".
ConvertStats convert_summeval(const std::filesystem::path& input,
                              const std::filesystem::path& output, Pooling pooling);

/// Topical-Chat converter: expects the upstream USR annotation file (a JSON
/// array of contexts with fact and annotated responses) and maps
/// Natural/Maintains Context/Engaging/Uses Knowledge onto
/// naturalness/coherence/engagingness/groundedness.
ConvertStats convert_topical_chat(const std::filesystem::path& input,
                                  const std::filesystem::path& output, Pooling pooling);

}  // namespace debate::data
