#pragma once

#include <string>
#include <string_view>

#include "pairadv/model.hpp"

namespace pairadv {

// Judge instruction for one preference pair: a fixed system message per
// label kind and a user message carrying the context and both responses.
struct TaskInstruction {
  LabelKind kind = LabelKind::Binary;
  std::string system_text;
  std::string user_text;
};

std::string_view system_template(LabelKind kind);
// User-message layout with {context}, {response1}, {response2} placeholders.
std::string_view user_template();

// Validates `ex`, then fills the user template in a single left-to-right pass
// (placeholder-like text inside the example is copied verbatim).
TaskInstruction render_prompt(LabelKind kind, const PreferenceExample& ex);

// Extracts the last <answer>...</answer> in `raw`. Payloads are
// case-sensitive; surrounding whitespace is stripped. The returned reasoning
// is `raw` with the matched tag removed.
// Throws ParseError{NoTag} or ParseError{BadPayload}.
Judgment parse_judgment(LabelKind kind, std::string_view raw,
                        TokenConvention convention = TokenConvention::Whitespace);

// Canonical "<answer>X</answer>" form; parse_judgment inverts it.
std::string format_answer(const PreferenceLabel& label);

}  // namespace pairadv
