#include "debate/parsing.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <stdexcept>
#include <vector>

namespace debate::parsing {
namespace {

struct Candidate {
  int value = 0;
  size_t position = 0;  // byte offset in the reply; ties broken by later position
};

bool is_word(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

std::string trim_decorations(std::string line) {
  const auto is_noise = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '*' || c == '_' || c == '#' || c == '>' ||
           c == '`';
  };
  while (!line.empty() && is_noise(line.back())) line.pop_back();
  size_t start = 0;
  while (start < line.size() && is_noise(line[start])) ++start;
  return line.substr(start);
}

// Tier 1: a short label, a colon, an integer, nothing else on the line.
// Covers the evaluation-form shape ("- Coherence: 4") and "Score: 4".
const std::regex kLabelLine(
    R"(^(?:(?:[-*+]|\(?\d{1,2}[.)])\s+)?([A-Za-z][A-Za-z _'/-]{0,40}?)\s*:\s*(-?\d+)\s*[.!]?$)",
    std::regex::icase);

// Tier 2: prose commitments to a score.
const std::regex kScoreOf(R"(\bscores?\s+of\s+(-?\d+)(?!\.?\d))", std::regex::icase);
const std::regex kScoreIs(R"(\bscore\s*(?:is|was|:|=)?\s*(-?\d+)(?!\.?\d))", std::regex::icase);
const std::regex kScoreCouldBe(
    R"(\bscore\s+(?:could|should|would|might|can|may|will)\s+(?:\w+\s+)?be\s+(?:an?\s+)?(-?\d+)(?!\.?\d))",
    std::regex::icase);
const std::regex kFinalScore(R"(\bfinal\s+score\b[^0-9\r\n]{0,60}?(-?\d+)(?!\.?\d))",
                             std::regex::icase);

std::optional<Candidate> last_label_line(const std::string& reply) {
  std::optional<Candidate> best;
  size_t line_start = 0;
  while (line_start <= reply.size()) {
    size_t line_end = reply.find('\n', line_start);
    if (line_end == std::string::npos) line_end = reply.size();
    const std::string line = trim_decorations(reply.substr(line_start, line_end - line_start));
    std::smatch m;
    if (std::regex_match(line, m, kLabelLine)) {
      try {
        best = Candidate{std::stoi(m[2].str()), line_start};
      } catch (const std::out_of_range&) {
        // Absurdly long digit runs are not scores; ignore the line.
      }
    }
    if (line_end == reply.size()) break;
    line_start = line_end + 1;
  }
  return best;
}

void collect_matches(const std::string& reply, const std::regex& re,
                     std::vector<Candidate>& out) {
  for (auto it = std::sregex_iterator(reply.begin(), reply.end(), re);
       it != std::sregex_iterator(); ++it) {
    try {
      out.push_back(Candidate{std::stoi((*it)[1].str()),
                              static_cast<size_t>(it->position(1))});
    } catch (const std::out_of_range&) {
    }
  }
}

std::optional<Candidate> last_score_phrase(const std::string& reply) {
  std::vector<Candidate> candidates;
  collect_matches(reply, kScoreOf, candidates);
  collect_matches(reply, kScoreIs, candidates);
  collect_matches(reply, kScoreCouldBe, candidates);
  collect_matches(reply, kFinalScore, candidates);
  if (candidates.empty()) return std::nullopt;
  return *std::max_element(candidates.begin(), candidates.end(),
                           [](const Candidate& a, const Candidate& b) {
                             return a.position < b.position;
                           });
}

// Integer tokens, rejecting decimals and digits glued to words.
std::vector<long long> integer_tokens(const std::string& reply) {
  std::vector<long long> tokens;
  const size_t n = reply.size();
  size_t i = 0;
  while (i < n) {
    const char c = reply[i];
    bool negative = false;
    size_t digits_at = i;
    if (c == '-' && i + 1 < n && std::isdigit(static_cast<unsigned char>(reply[i + 1]))) {
      // A minus is a sign only when it does not separate two numbers ("1-5").
      negative = !(i > 0 && std::isdigit(static_cast<unsigned char>(reply[i - 1])));
      digits_at = i + 1;
    } else if (!std::isdigit(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const size_t token_start = negative ? i : digits_at;
    if (token_start > 0 && (is_word(reply[token_start - 1]) || reply[token_start - 1] == '.')) {
      // Glued to a word or a decimal point; skip the digit run.
      i = digits_at;
      while (i < n && std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
      continue;
    }
    size_t end = digits_at;
    while (end < n && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
    const bool decimal =
        end + 1 < n && reply[end] == '.' && std::isdigit(static_cast<unsigned char>(reply[end + 1]));
    const bool glued = end < n && is_word(reply[end]);
    if (!decimal && !glued && end - digits_at <= 9) {
      long long v = std::stoll(reply.substr(token_start, end - token_start));
      tokens.push_back(v);
    }
    i = end;
    if (decimal) {
      ++i;
      while (i < n && std::isdigit(static_cast<unsigned char>(reply[i]))) ++i;
    }
  }
  return tokens;
}

ScoreExtraction accept(int value, int scale_min, int scale_max, const char* tier) {
  ScoreExtraction r;
  if (value < scale_min || value > scale_max) {
    r.code = ParseCode::out_of_range;
    r.rejected = value;
    r.detail = std::string(tier) + " candidate " + std::to_string(value) + " outside [" +
               std::to_string(scale_min) + ", " + std::to_string(scale_max) + "]";
    return r;
  }
  r.code = ParseCode::ok;
  r.value = value;
  r.detail = tier;
  return r;
}

}  // namespace

std::string_view to_string(ParseCode code) {
  switch (code) {
    case ParseCode::ok: return "ok";
    case ParseCode::no_score_found: return "no_score_found";
    case ParseCode::out_of_range: return "out_of_range";
    case ParseCode::ambiguous: return "ambiguous";
  }
  return "?";
}

ScoreExtraction extract_score(const std::string& reply, int scale_min, int scale_max) {
  if (scale_min >= scale_max) throw std::invalid_argument("extract_score: degenerate scale");

  if (const auto label = last_label_line(reply)) {
    return accept(label->value, scale_min, scale_max, "label_line");
  }
  if (const auto phrase = last_score_phrase(reply)) {
    return accept(phrase->value, scale_min, scale_max, "score_phrase");
  }

  const auto tokens = integer_tokens(reply);
  std::vector<long long> in_range;
  for (long long t : tokens) {
    if (t >= scale_min && t <= scale_max) in_range.push_back(t);
  }
  if (in_range.size() == 1) {
    return accept(static_cast<int>(in_range.front()), scale_min, scale_max, "bare_integer");
  }
  ScoreExtraction r;
  if (in_range.size() > 1) {
    r.code = ParseCode::ambiguous;
    r.detail = std::to_string(in_range.size()) + " in-range integers with no score marker";
  } else if (tokens.size() == 1) {
    // A single integer reply that misses the scale is a malformed score.
    const long long v = tokens.front();
    r.code = ParseCode::out_of_range;
    if (v >= INT32_MIN && v <= INT32_MAX) r.rejected = static_cast<int>(v);
    r.detail = "bare integer " + std::to_string(v) + " outside the scale";
  } else {
    r.code = ParseCode::no_score_found;
    r.detail = "no score marker or unambiguous integer found";
  }
  return r;
}

namespace {

std::string normalize_concession(const std::string& text) {
  std::string out = text;
  for (char& c : out) {
    if (c == '_') c = ' ';
    else c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

const std::regex kNoIssue(R"(\bno\s+issues?\b)");

}  // namespace

std::optional<std::pair<size_t, size_t>> find_concession(const std::string& feedback,
                                                         ConcessionMode mode) {
  const std::string normalized = normalize_concession(feedback);
  std::smatch m;
  if (!std::regex_search(normalized, m, kNoIssue)) return std::nullopt;
  const size_t begin = static_cast<size_t>(m.position(0));
  const size_t end = begin + static_cast<size_t>(m.length(0));
  if (mode == ConcessionMode::literal) return std::make_pair(begin, end);

  // Standalone mode: the declaration must be a whole line on its own,
  // allowing surrounding punctuation or whitespace.
  size_t line_start = 0;
  while (line_start <= normalized.size()) {
    size_t line_end = normalized.find('\n', line_start);
    if (line_end == std::string::npos) line_end = normalized.size();
    const std::string line = normalized.substr(line_start, line_end - line_start);
    std::smatch lm;
    if (std::regex_search(line, lm, kNoIssue)) {
      const auto is_filler = [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); };
      const std::string before = line.substr(0, static_cast<size_t>(lm.position(0)));
      const std::string after = line.substr(static_cast<size_t>(lm.position(0) + lm.length(0)));
      if (std::all_of(before.begin(), before.end(), is_filler) &&
          std::all_of(after.begin(), after.end(), is_filler)) {
        return std::make_pair(line_start + static_cast<size_t>(lm.position(0)),
                              line_start + static_cast<size_t>(lm.position(0) + lm.length(0)));
      }
    }
    if (line_end == normalized.size()) break;
    line_start = line_end + 1;
  }
  return std::nullopt;
}

bool detect_concession(const std::string& feedback, ConcessionMode mode) {
  return find_concession(feedback, mode).has_value();
}

}  // namespace debate::parsing
