#include "debate/prompts.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "debate/hashing.hpp"

namespace debate::prompts {
namespace {

using nlohmann::json;

bool placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || c == '_';
}

// Scans body for {snake_case} markers and feeds each one to `visit`.
// visit(name) returns the replacement text.
template <typename Fn>
std::string scan_placeholders(const std::string& body, Fn&& visit) {
  std::string out;
  out.reserve(body.size());
  size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '{') {
      size_t j = i + 1;
      while (j < body.size() && placeholder_char(body[j])) ++j;
      if (j > i + 1 && j < body.size() && body[j] == '}') {
        out += visit(body.substr(i + 1, j - i - 1));
        i = j + 1;
        continue;
      }
    }
    out.push_back(body[i++]);
  }
  return out;
}

size_t count_occurrences(const std::string& body, const std::string& name) {
  const std::string marker = "{" + name + "}";
  size_t count = 0, pos = 0;
  while ((pos = body.find(marker, pos)) != std::string::npos) {
    ++count;
    pos += marker.size();
  }
  return count;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PromptError("pack_error", "cannot read prompt file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  // Files end with one conventional newline that is not part of the prompt.
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

std::string load_verified(const std::filesystem::path& dir, const json& entry) {
  const std::string file = entry.at("file").get<std::string>();
  const auto path = dir / file;
  const std::string expected = entry.at("sha256").get<std::string>();
  const std::string actual = sha256_file(path);
  if (actual != expected) {
    throw PromptError("pack_error", "hash mismatch for " + file + ": manifest says " + expected +
                                        ", file is " + actual);
  }
  return read_text_file(path);
}

}  // namespace

void PromptTemplate::validate() const {
  for (const auto& name : required_placeholders) {
    const size_t n = count_occurrences(body, name);
    if (n != 1) {
      throw PromptError("invalid_template", "template '" + template_id + "': placeholder {" +
                                                name + "} occurs " + std::to_string(n) +
                                                " times, expected exactly once");
    }
  }
  if (!cot_cue.empty() && body.find(cot_cue) == std::string::npos) {
    throw PromptError("invalid_template",
                      "template '" + template_id + "' lacks its chain-of-thought cue");
  }
}

std::string render_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& bindings) {
  return scan_placeholders(tmpl.body, [&](const std::string& name) -> std::string {
    const auto it = bindings.find(name);
    if (it == bindings.end()) {
      throw PromptError("unbound_placeholder",
                        "template '" + tmpl.template_id + "': no binding for {" + name + "}");
    }
    return it->second;
  });
}

PromptPack PromptPack::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw PromptError("pack_error", "no manifest.json under " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& ex) {
    throw PromptError("pack_error", std::string("manifest.json is not valid JSON: ") + ex.what());
  }

  PromptPack pack;
  pack.dir_ = dir;
  for (const auto& entry : manifest.at("system_messages")) {
    const std::string text = load_verified(dir, entry);
    const std::string role = entry.at("role").get<std::string>();
    if (role == "commander") {
      pack.system_.commander = text;
    } else if (role == "scorer") {
      pack.system_.scorer = text;
    } else if (role == "tiebreaker") {
      pack.system_.tiebreaker = text;
    } else if (role == "critic") {
      const auto persona = parse_persona_level(entry.at("persona").get<std::string>());
      const auto variant = parse_prompt_variant(entry.value("variant", "original"));
      if (variant == PromptVariant::sophisticated) {
        pack.system_.critic_sophisticated = text;
      } else {
        pack.system_.critic_by_persona[persona] = text;
      }
    } else {
      throw PromptError("pack_error", "unknown system message role '" + role + "'");
    }
  }
  for (const auto persona : {PersonaLevel::plain, PersonaLevel::weakly_negative,
                             PersonaLevel::moderately_negative, PersonaLevel::strictly_negative}) {
    if (!pack.system_.critic_by_persona.count(persona)) {
      throw PromptError("pack_error", "pack lacks the critic message for persona " +
                                          std::string(to_string(persona)));
    }
  }

  for (const auto& entry : manifest.at("templates")) {
    PromptTemplate tmpl;
    tmpl.template_id = entry.at("id").get<std::string>();
    tmpl.task = entry.value("task", "*");
    tmpl.aspect = entry.value("aspect", "*");
    tmpl.body = load_verified(dir, entry);
    for (const auto& name : entry.value("required_placeholders", std::vector<std::string>{})) {
      tmpl.required_placeholders.insert(name);
    }
    tmpl.cot_cue = entry.value("cot_cue", "");
    tmpl.reconstruction = entry.value("reconstruction", false);
    tmpl.validate();
    pack.templates_.push_back(std::move(tmpl));
  }
  return pack;
}

std::filesystem::path PromptPack::default_dir() {
  if (const char* env = std::getenv("DEBATE_PROMPT_DIR"); env && *env) return env;
  return "prompts";
}

const std::string& PromptPack::critic_system_message(PersonaLevel persona,
                                                     PromptVariant variant) const {
  if (variant == PromptVariant::sophisticated) {
    if (persona != PersonaLevel::strictly_negative) {
      throw PromptError("unsupported_combination",
                        "the sophisticated critic prompt exists only for the strictly_negative "
                        "persona (asked for " +
                            std::string(to_string(persona)) + ")");
    }
    return system_.critic_sophisticated;
  }
  return system_.critic_by_persona.at(persona);
}

const PromptTemplate& PromptPack::scoring_template(TaskKind task, std::string_view aspect,
                                                   std::string_view template_id) const {
  const std::string task_name(to_string(task));
  const PromptTemplate* wildcard_aspect = nullptr;
  const PromptTemplate* wildcard_all = nullptr;
  for (const auto& tmpl : templates_) {
    if (tmpl.template_id != template_id) continue;
    if (tmpl.task == task_name && tmpl.aspect == aspect) return tmpl;
    if (tmpl.task == task_name && tmpl.aspect == "*") wildcard_aspect = &tmpl;
    if (tmpl.task == "*" && tmpl.aspect == "*") wildcard_all = &tmpl;
  }
  if (wildcard_aspect) return *wildcard_aspect;
  if (wildcard_all) return *wildcard_all;
  throw PromptError("pack_error", "no template '" + std::string(template_id) + "' for task " +
                                      task_name + ", aspect " + std::string(aspect));
}

const PromptTemplate& PromptPack::named_template(std::string_view template_id) const {
  for (const auto& tmpl : templates_) {
    if (tmpl.template_id == template_id) return tmpl;
  }
  throw PromptError("pack_error", "no template named '" + std::string(template_id) + "'");
}

std::string aspect_title(std::string_view name) {
  std::string title(name);
  if (!title.empty() && title[0] >= 'a' && title[0] <= 'z') {
    title[0] = static_cast<char>(title[0] - 'a' + 'A');
  }
  return title;
}

std::string criteria_line(const AspectSpec& aspect) {
  return aspect_title(aspect.name) + " (" + std::to_string(aspect.scale_min) + "-" +
         std::to_string(aspect.scale_max) + ") - " + aspect.criteria_text;
}

std::string render_context_blocks(const TaskSpec& task, const EvaluationItem& item) {
  std::string out;
  for (const auto& label : task.context_labels) {
    const ContextBlock* block = item.find_block(label);
    if (!block) {
      throw PromptError("missing_block", "item '" + item.item_id + "' lacks the context block '" +
                                             label + "'");
    }
    if (!out.empty()) out += "\n\n";
    out += label + ":\n\n" + block->text;
  }
  return out;
}

std::string render_scoring_prompt(const PromptPack& pack, const TaskSpec& task,
                                  const AspectSpec& aspect, const EvaluationItem& item,
                                  std::string_view template_id) {
  const PromptTemplate& tmpl = pack.scoring_template(task.task_kind, aspect.name, template_id);
  return render_template(tmpl, {
                                   {"instruction", task.instruction_text},
                                   {"criteria", criteria_line(aspect)},
                                   {"steps", aspect.steps_text},
                                   {"source_blocks", render_context_blocks(task, item)},
                                   {"aspect_name", aspect_title(aspect.name)},
                                   {"scale_min", std::to_string(aspect.scale_min)},
                                   {"scale_max", std::to_string(aspect.scale_max)},
                               });
}

std::string render_critic_forward(const PromptPack& pack, const std::string& scoring_prompt,
                                  const std::string& scorer_reply) {
  return render_template(pack.named_template("critic_forward"),
                         {{"scoring_prompt", scoring_prompt}, {"scorer_reply", scorer_reply}});
}

std::string render_revision_request(const PromptPack& pack, const std::string& feedback,
                                    int scale_min, int scale_max) {
  if (feedback.empty()) {
    throw PromptError("empty_feedback", "refusing to build a revision request with no feedback");
  }
  return render_template(pack.named_template("revision_request"),
                         {{"feedback", feedback},
                          {"scale_min", std::to_string(scale_min)},
                          {"scale_max", std::to_string(scale_max)}});
}

std::string render_debate_log(const std::vector<TranscriptEntry>& entries) {
  std::string log;
  for (const auto& entry : entries) {
    if (entry.direction != Direction::reply) continue;
    if (!log.empty()) log += "\n\n";
    log += aspect_title(to_string(entry.role)) + ": " + entry.content;
  }
  return log;
}

std::string render_tiebreaker_prompt(const PromptPack& pack, const TaskSpec& task,
                                     const AspectSpec& aspect, const EvaluationItem& item,
                                     const std::vector<TranscriptEntry>& entries) {
  if (entries.empty()) {
    throw PromptError("empty_transcript", "tie-breaker asked to rule on an empty transcript");
  }
  return render_template(pack.named_template("tiebreaker_request"),
                         {
                             {"tiebreaker_instruction", pack.system_messages().tiebreaker},
                             {"criteria", criteria_line(aspect)},
                             {"steps", aspect.steps_text},
                             {"source_blocks", render_context_blocks(task, item)},
                             {"debate_log", render_debate_log(entries)},
                             {"aspect_name", aspect_title(aspect.name)},
                         });
}

}  // namespace debate::prompts
