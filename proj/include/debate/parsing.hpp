#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>

namespace debate::parsing {

enum class ParseCode { ok, no_score_found, out_of_range, ambiguous };

std::string_view to_string(ParseCode code);

struct ScoreExtraction {
  ParseCode code = ParseCode::no_score_found;
  std::optional<int> value;     // set iff code == ok
  std::optional<int> rejected;  // the out-of-range value, when code == out_of_range
  std::string detail;

  explicit operator bool() const { return code == ParseCode::ok; }
};

/// Pulls an integer score out of a free-text agent reply.
///
/// Precedence: (1) a label line such as "Coherence: 4" or "score: 4",
/// last occurrence wins; (2) a phrase like "a score of 2" or
/// "final score ... 2", last occurrence wins; (3) a bare integer when the
/// reply contains exactly one in-range integer token. Non-integer numbers
/// are never candidates. Never throws on reply content.
ScoreExtraction extract_score(const std::string& reply, int scale_min, int scale_max);

enum class ConcessionMode {
  literal,     // substring rule: any "NO ISSUE(S)" token sequence anywhere
  standalone,  // stricter: a line consisting solely of the declaration
};

/// Byte range of the concession token sequence in `feedback`, if present.
/// Matching is case-insensitive and treats underscores as spaces, which
/// covers all three shipped spellings ("NO ISSUE", "NO ISSUES", "NO_ISSUES").
std::optional<std::pair<size_t, size_t>> find_concession(
    const std::string& feedback, ConcessionMode mode = ConcessionMode::literal);

bool detect_concession(const std::string& feedback,
                       ConcessionMode mode = ConcessionMode::literal);

}  // namespace debate::parsing
