#include "debate/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "debate/hashing.hpp"
#include "debate/serde.hpp"

namespace debate::data {
namespace {

using nlohmann::json;

double pool(std::vector<double> values, Pooling pooling) {
  if (values.empty()) throw DatasetError("schema_error", "empty annotation list");
  if (pooling == Pooling::mean) {
    double sum = 0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
  }
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

[[noreturn]] void record_error(const std::string& code, const std::filesystem::path& path,
                               size_t line_no, const std::string& what) {
  throw DatasetError(code, path.string() + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

const AspectSpec& DatasetManifest::aspect(std::string_view name) const {
  for (const auto& a : aspects) {
    if (a.name == name) return a;
  }
  throw DatasetError("unknown_aspect", "manifest '" + dataset_id + "' has no aspect '" +
                                           std::string(name) + "'");
}

bool DatasetManifest::has_aspect(std::string_view name) const {
  return std::any_of(aspects.begin(), aspects.end(),
                     [&](const AspectSpec& a) { return a.name == name; });
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("schema_error", "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& ex) {
    throw DatasetError("schema_error", path.string() + ": " + ex.what());
  }
  DatasetManifest manifest;
  try {
    j.at("dataset_id").get_to(manifest.dataset_id);
    j.at("task").get_to(manifest.task);
    j.at("aspects").get_to(manifest.aspects);
    j.at("expected_groups").get_to(manifest.expected_groups);
    j.at("expected_items_per_group").get_to(manifest.expected_items_per_group);
    manifest.correlation_convention =
        j.value("correlation_convention", std::vector<std::string>{"spearman", "kendall"});
  } catch (const json::exception& ex) {
    throw DatasetError("schema_error", path.string() + ": " + ex.what());
  }
  if (manifest.aspects.empty())
    throw DatasetError("schema_error", path.string() + ": manifest declares no aspects");
  return manifest;
}

std::vector<EvaluationItem> load_dataset(const std::filesystem::path& path,
                                         const DatasetManifest& manifest) {
  std::ifstream in(path);
  if (!in) throw DatasetError("schema_error", "cannot open dataset " + path.string());

  std::vector<EvaluationItem> items;
  std::set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    EvaluationItem item;
    try {
      item = json::parse(line).get<EvaluationItem>();
    } catch (const json::exception& ex) {
      record_error("schema_error", path, line_no, ex.what());
    }
    if (!seen_ids.insert(item.item_id).second) {
      record_error("schema_error", path, line_no, "duplicate item_id '" + item.item_id + "'");
    }
    for (const auto& label : manifest.task.context_labels) {
      if (!item.find_block(label)) {
        record_error("schema_error", path, line_no,
                     "item '" + item.item_id + "' lacks context block '" + label + "'");
      }
    }
    for (const auto& aspect : manifest.aspects) {
      const auto it = item.human_scores.find(aspect.name);
      if (it == item.human_scores.end()) {
        record_error("missing_aspect_score", path, line_no,
                     "item '" + item.item_id + "' has no human score for '" + aspect.name + "'");
      }
      if (it->second < aspect.scale_min || it->second > aspect.scale_max) {
        record_error("schema_error", path, line_no,
                     "item '" + item.item_id + "': human " + aspect.name + " score " +
                         std::to_string(it->second) + " outside the scale");
      }
    }
    items.push_back(std::move(item));
  }

  const long expected =
      static_cast<long>(manifest.expected_groups) * manifest.expected_items_per_group;
  if (static_cast<long>(items.size()) != expected) {
    throw DatasetError("count_mismatch",
                       path.string() + ": expected " + std::to_string(expected) + " items, got " +
                           std::to_string(items.size()));
  }
  std::map<std::string, int> group_sizes;
  for (const auto& item : items) ++group_sizes[item.group_id];
  if (static_cast<int>(group_sizes.size()) != manifest.expected_groups) {
    throw DatasetError("count_mismatch", path.string() + ": expected " +
                                             std::to_string(manifest.expected_groups) +
                                             " groups, got " +
                                             std::to_string(group_sizes.size()));
  }
  for (const auto& [group, size] : group_sizes) {
    if (size != manifest.expected_items_per_group) {
      throw DatasetError("count_mismatch", path.string() + ": group '" + group + "' has " +
                                               std::to_string(size) + " items, expected " +
                                               std::to_string(manifest.expected_items_per_group));
    }
  }
  return items;
}

std::vector<EvaluationItem> subsample(const std::vector<EvaluationItem>& items, int n_groups,
                                      std::uint64_t seed) {
  std::vector<std::string> groups;
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (seen.insert(item.group_id).second) groups.push_back(item.group_id);
  }
  std::sort(groups.begin(), groups.end());
  if (n_groups > static_cast<int>(groups.size())) {
    throw DatasetError("insufficient_groups", "asked for " + std::to_string(n_groups) +
                                                  " groups, dataset has " +
                                                  std::to_string(groups.size()));
  }
  // Hand-rolled Fisher-Yates so the selection is stable across platforms.
  std::mt19937_64 rng(seed);
  for (size_t i = groups.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng() % i);
    std::swap(groups[i - 1], groups[j]);
  }
  std::set<std::string> chosen(groups.begin(), groups.begin() + n_groups);
  std::vector<EvaluationItem> subset;
  for (const auto& item : items) {
    if (chosen.count(item.group_id)) subset.push_back(item);
  }
  return subset;
}

std::vector<EvaluationItem> make_synthetic(const DatasetManifest& manifest, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<EvaluationItem> items;
  items.reserve(static_cast<size_t>(manifest.expected_groups) *
                static_cast<size_t>(manifest.expected_items_per_group));
  for (int g = 0; g < manifest.expected_groups; ++g) {
    char group_id[32];
    std::snprintf(group_id, sizeof(group_id), "grp-%04d", g);
    for (int k = 0; k < manifest.expected_items_per_group; ++k) {
      EvaluationItem item;
      char system_id[32];
      std::snprintf(system_id, sizeof(system_id), "sys-%02d", k);
      item.group_id = group_id;
      item.system_id = system_id;
      item.item_id = std::string(group_id) + "-" + system_id;
      for (const auto& label : manifest.task.context_labels) {
        item.context_blocks.push_back(
            {label, "Synthetic " + label + " text for " + item.item_id + "."});
      }
      for (const auto& aspect : manifest.aspects) {
        // Three simulated annotators, averaged: the scores look like the
        // pooled expert ratings real datasets ship.
        const int span = aspect.scale_max - aspect.scale_min + 1;
        int sum = 0;
        for (int a = 0; a < 3; ++a) sum += aspect.scale_min + static_cast<int>(rng() % span);
        item.human_scores[aspect.name] = static_cast<double>(sum) / 3.0;
      }
      items.push_back(std::move(item));
    }
  }
  return items;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<EvaluationItem>& items) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DatasetError("schema_error", "cannot write " + path.string());
  for (const auto& item : items) out << json(item).dump() << "\n";
}

Pooling parse_pooling(std::string_view s) {
  if (s == "mean") return Pooling::mean;
  if (s == "median") return Pooling::median;
  throw DatasetError("schema_error", "unknown pooling '" + std::string(s) + "'");
}

namespace {

void write_provenance(const std::filesystem::path& input, const std::filesystem::path& output,
                      Pooling pooling, const ConvertStats& stats) {
  json prov{{"source_file", input.string()},
            {"source_sha256", stats.input_sha256},
            {"items", stats.items},
            {"groups", stats.groups},
            {"pooling", pooling == Pooling::mean ? "mean" : "median"},
            {"converted_at", iso_utc_now()}};
  std::ofstream out(output.string() + ".provenance.json");
  out << prov.dump(2) << "\n";
}

}  // namespace

ConvertStats convert_summeval(const std::filesystem::path& input,
                              const std::filesystem::path& output, Pooling pooling) {
  std::ifstream in(input);
  if (!in) throw DatasetError("schema_error", "cannot open " + input.string());
  ConvertStats stats;
  stats.input_sha256 = sha256_file(input);

  static const std::vector<std::string> kAspects = {"coherence", "consistency", "fluency",
                                                    "relevance"};
  std::vector<EvaluationItem> items;
  std::set<std::string> groups;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& ex) {
      record_error("schema_error", input, line_no, ex.what());
    }
    EvaluationItem item;
    try {
      const std::string doc_id = record.at("id").get<std::string>();
      const std::string model_id = record.at("model_id").get<std::string>();
      item.group_id = doc_id;
      item.system_id = model_id;
      item.item_id = doc_id + "-" + model_id;
      std::string source;
      if (record.contains("text")) source = record["text"].get<std::string>();
      else if (record.contains("source")) source = record["source"].get<std::string>();
      else record_error("schema_error", input, line_no, "record has neither 'text' nor 'source'");
      item.context_blocks.push_back({"Source Text", source});
      item.context_blocks.push_back({"Summary", record.at("decoded").get<std::string>()});
      for (const auto& aspect : kAspects) {
        std::vector<double> values;
        for (const auto& annotation : record.at("expert_annotations")) {
          values.push_back(annotation.at(aspect).get<double>());
        }
        item.human_scores[aspect] = pool(values, pooling);
      }
    } catch (const json::exception& ex) {
      record_error("schema_error", input, line_no, ex.what());
    }
    groups.insert(item.group_id);
    items.push_back(std::move(item));
  }
  write_jsonl(output, items);
  stats.items = static_cast<int>(items.size());
  stats.groups = static_cast<int>(groups.size());
  write_provenance(input, output, pooling, stats);
  return stats;
}

ConvertStats convert_topical_chat(const std::filesystem::path& input,
                                  const std::filesystem::path& output, Pooling pooling) {
  std::ifstream in(input);
  if (!in) throw DatasetError("schema_error", "cannot open " + input.string());
  ConvertStats stats;
  stats.input_sha256 = sha256_file(input);

  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& ex) {
    throw DatasetError("schema_error", input.string() + ": " + ex.what());
  }
  if (!root.is_array()) {
    throw DatasetError("schema_error", input.string() + ": expected a top-level array");
  }

  // Upstream annotation names -> the aspect names the manifest declares.
  static const std::vector<std::pair<std::string, std::string>> kMapping = {
      {"Natural", "naturalness"},
      {"Maintains Context", "coherence"},
      {"Engaging", "engagingness"},
      {"Uses Knowledge", "groundedness"},
  };

  std::vector<EvaluationItem> items;
  std::set<std::string> groups;
  int ctx_index = 0;
  for (const auto& context_record : root) {
    char group_id[32];
    std::snprintf(group_id, sizeof(group_id), "ctx-%04d", ctx_index++);
    const std::string history = context_record.at("context").get<std::string>();
    const std::string fact = context_record.at("fact").get<std::string>();
    for (const auto& response : context_record.at("responses")) {
      EvaluationItem item;
      item.group_id = group_id;
      item.system_id = response.value("model", "unknown");
      item.item_id = std::string(group_id) + "-" + item.system_id;
      item.context_blocks.push_back({"Conversation History", history});
      item.context_blocks.push_back({"Corresponding Fact", fact});
      item.context_blocks.push_back({"Response", response.at("response").get<std::string>()});
      for (const auto& [upstream, aspect] : kMapping) {
        std::vector<double> values;
        for (const auto& v : response.at(upstream)) values.push_back(v.get<double>());
        double pooled = pool(values, pooling);
        if (aspect == "groundedness") {
          // Upstream grades knowledge use on 0/1; pooled averages stay in [0,1].
          pooled = std::min(1.0, std::max(0.0, pooled));
        }
        item.human_scores[aspect] = pooled;
      }
      groups.insert(item.group_id);
      items.push_back(std::move(item));
    }
  }
  write_jsonl(output, items);
  stats.items = static_cast<int>(items.size());
  stats.groups = static_cast<int>(groups.size());
  write_provenance(input, output, pooling, stats);
  return stats;
}

}  // namespace debate::data
