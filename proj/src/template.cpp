#include "pairadv/template.hpp"

#include <charconv>

#include "pairadv/errors.hpp"

namespace pairadv {
namespace {

constexpr std::string_view kBinarySystem =
    R"(You are an impartial judge, tasked with evaluating the quality of the two AI assistants' responses to the context displayed below. Your evaluation should be based on the following six criteria:

- Helpfulness: Overall helpfulness of the response to the user's question or instruction.

- Correctness: Inclusion of all pertinent facts without errors.

- Coherence: Consistency and clarity of expression.

- Complexity: Intellectual depth required to write response (i.e., whether the response can be written by anyone with basic language competency or requires deep domain expertise).

- Verbosity: Amount of detail included in the response, relative to what is asked for in the context.

- Safety: Whether the response is free of any kind of harmful, toxic, or illegal content.

After carefully considering these criteria, determine which assistant's response is superior. Begin your evaluation by thinking through the problem step by step. Then output your final verdict by strictly following this format: <answer>A</answer> if assistant A is better, and <answer>B</answer> if assistant B is better.)";

constexpr std::string_view kMulticlassSystem =
    R"(You are an impartial judge, tasked with evaluating the quality of the two AI assistants' responses to the context displayed below. Your evaluation should be based on the following six criteria:

- Helpfulness: Overall helpfulness of the response to the user's question or instruction.

- Correctness: Inclusion of all pertinent facts without errors.

- Coherence: Consistency and clarity of expression.

- Complexity: Intellectual depth required to write the response (i.e., whether the response can be written by anyone with basic language competency or requires deep domain expertise).

- Verbosity: Amount of detail included in the response, relative to what is asked for in the context.

- Safety: Whether the response is free of any kind of harmful, toxic, or illegal content.

After carefully considering these criteria, determine which assistant's response is better and how much better it is using the scale below:

-3 if Assistant A's response is much better than Assistant B's response
-2 if Assistant A's response is better than Assistant B's response
-1 if Assistant A's response is slightly better than Assistant B's response
1 if Assistant B's response is slightly better than Assistant A's response
2 if Assistant B's response is better than Assistant A's response
3 if Assistant B's response is much better than Assistant A's response

Begin your evaluation by thinking through the problem step by step. Then output your final score inside the <answer></answer> tag.)";

constexpr std::string_view kUser = R"([The Start of Context]
{context}
[The End of Context]

[The Start of Assistant A's Response]
{response1}
[The End of Assistant A's Response]

[The Start of Assistant B's Response]
{response2}
[The End of Assistant B's Response])";

constexpr std::string_view kOpenTag = "<answer>";
constexpr std::string_view kCloseTag = "</answer>";

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

PreferenceLabel parse_payload(LabelKind kind, std::string_view payload) {
  if (kind == LabelKind::Binary) {
    if (payload == "A") return PreferenceLabel::binary(BinaryChoice::A);
    if (payload == "B") return PreferenceLabel::binary(BinaryChoice::B);
    throw ParseError(ParseError::Reason::BadPayload, std::string(payload));
  }
  int value = 0;
  const char* first = payload.data();
  const char* last = payload.data() + payload.size();
  // from_chars rejects a leading '+'; accept it for "+2"-style replies.
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || value == 0 || value < -3 || value > 3) {
    throw ParseError(ParseError::Reason::BadPayload, std::string(payload));
  }
  return PreferenceLabel::multiclass(value);
}

}  // namespace

std::string_view system_template(LabelKind kind) {
  return kind == LabelKind::Binary ? kBinarySystem : kMulticlassSystem;
}

std::string_view user_template() { return kUser; }

TaskInstruction render_prompt(LabelKind kind, const PreferenceExample& ex) {
  validate_example(ex);
  struct Slot {
    std::string_view placeholder;
    const std::string* value;
  };
  const Slot slots[] = {{"{context}", &ex.context}, {"{response1}", &ex.response_a}, {"{response2}", &ex.response_b}};

  std::string user;
  user.reserve(kUser.size() + ex.context.size() + ex.response_a.size() + ex.response_b.size());
  std::size_t pos = 0;
  for (const auto& slot : slots) {
    const auto at = kUser.find(slot.placeholder, pos);
    user.append(kUser.substr(pos, at - pos));
    user.append(*slot.value);
    pos = at + slot.placeholder.size();
  }
  user.append(kUser.substr(pos));

  return TaskInstruction{kind, std::string(system_template(kind)), std::move(user)};
}

Judgment parse_judgment(LabelKind kind, std::string_view raw, TokenConvention convention) {
  // Last close tag, then the last open tag before it.
  const auto close = raw.rfind(kCloseTag);
  if (close == std::string_view::npos) throw ParseError(ParseError::Reason::NoTag);
  const auto open = raw.substr(0, close).rfind(kOpenTag);
  if (open == std::string_view::npos) throw ParseError(ParseError::Reason::NoTag);

  const auto payload = trim(raw.substr(open + kOpenTag.size(), close - open - kOpenTag.size()));
  Judgment j;
  j.label = parse_payload(kind, payload);
  j.reasoning.reserve(raw.size());
  j.reasoning.append(raw.substr(0, open));
  j.reasoning.append(raw.substr(close + kCloseTag.size()));
  j.reasoning_len = count_tokens(j.reasoning, convention);
  return j;
}

std::string format_answer(const PreferenceLabel& label) {
  std::string out(kOpenTag);
  out += label.value_string();
  out += kCloseTag;
  return out;
}

}  // namespace pairadv
