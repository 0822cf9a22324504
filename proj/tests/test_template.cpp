#include "pairadv/template.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pairadv/errors.hpp"

namespace pairadv {
namespace {

std::string golden(const std::string& name) {
  std::ifstream in(std::string(PAIRADV_TEMPLATE_DIR) + "/" + name, std::ios::binary);
  EXPECT_TRUE(in.good()) << name;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fill(std::string text, const std::string& key, const std::string& value) {
  const auto pos = text.find(key);
  EXPECT_NE(pos, std::string::npos) << key;
  return text.replace(pos, key.size(), value);
}

const PreferenceExample kExample{"ex-7", "User: Is {response1} a placeholder?", "Yes.", "It is {context}.",
                                 PreferenceLabel::binary(BinaryChoice::A)};

TEST(Templates, MatchGoldenFiles) {
  EXPECT_EQ(system_template(LabelKind::Binary), golden("binary_system.txt"));
  EXPECT_EQ(system_template(LabelKind::Multiclass), golden("multiclass_system.txt"));
  EXPECT_EQ(user_template(), golden("user.txt"));
}

TEST(RenderPrompt, ByteMatchesGoldenFill) {
  // Placeholders inside the inserted text must survive untouched, so fill
  // from the last slot backwards.
  std::string expected = golden("user.txt");
  expected = fill(expected, "{response2}", kExample.response_b);
  expected = fill(expected, "{response1}", kExample.response_a);
  expected = fill(expected, "{context}", kExample.context);
  for (auto kind : {LabelKind::Binary, LabelKind::Multiclass}) {
    const auto prompt = render_prompt(kind, kExample);
    EXPECT_EQ(prompt.kind, kind);
    EXPECT_EQ(prompt.user_text, expected);
    EXPECT_EQ(prompt.system_text, golden(kind == LabelKind::Binary ? "binary_system.txt" : "multiclass_system.txt"));
  }
}

TEST(RenderPrompt, ValidatesExample) {
  auto ex = kExample;
  ex.context.clear();
  EXPECT_THROW(render_prompt(LabelKind::Binary, ex), ValidationError);
}

TEST(ParseJudgment, FormatRoundTripsAllLabels) {
  for (const auto& label : all_labels()) {
    const auto j = parse_judgment(label.kind(), format_answer(label));
    EXPECT_EQ(j.label, label);
    EXPECT_EQ(j.reasoning_len, 0u);
  }
}

TEST(ParseJudgment, UsesLastTagAndStripsIt) {
  const auto j = parse_judgment(LabelKind::Binary, "first <answer>A</answer> then more words <answer> B </answer>");
  EXPECT_EQ(j.label, PreferenceLabel::binary(BinaryChoice::B));
  EXPECT_EQ(j.reasoning, "first <answer>A</answer> then more words ");
  EXPECT_EQ(j.reasoning_len, 5u);
  EXPECT_EQ(parse_judgment(LabelKind::Multiclass, "x <answer>+2</answer>").label, PreferenceLabel::multiclass(2));
  EXPECT_EQ(parse_judgment(LabelKind::Multiclass, "<answer>-3</answer>").label, PreferenceLabel::multiclass(-3));
}

TEST(ParseJudgment, Failures) {
  auto reason = [](LabelKind kind, const char* raw) {
    try {
      parse_judgment(kind, raw);
    } catch (const ParseError& e) {
      return e.reason();
    }
    ADD_FAILURE() << raw;
    return ParseError::Reason::NoTag;
  };
  EXPECT_EQ(reason(LabelKind::Binary, "no tag at all"), ParseError::Reason::NoTag);
  EXPECT_EQ(reason(LabelKind::Binary, "A</answer>"), ParseError::Reason::NoTag);
  EXPECT_EQ(reason(LabelKind::Binary, "<answer>a</answer>"), ParseError::Reason::BadPayload);
  EXPECT_EQ(reason(LabelKind::Binary, "<answer>1</answer>"), ParseError::Reason::BadPayload);
  EXPECT_EQ(reason(LabelKind::Multiclass, "<answer>0</answer>"), ParseError::Reason::BadPayload);
  EXPECT_EQ(reason(LabelKind::Multiclass, "<answer>4</answer>"), ParseError::Reason::BadPayload);
  EXPECT_EQ(reason(LabelKind::Multiclass, "<answer>A</answer>"), ParseError::Reason::BadPayload);
  EXPECT_EQ(reason(LabelKind::Multiclass, "<answer>2x</answer>"), ParseError::Reason::BadPayload);
}

TEST(ParseJudgment, CharacterTokenConvention) {
  const auto j = parse_judgment(LabelKind::Binary, "abc <answer>A</answer>", TokenConvention::Characters);
  EXPECT_EQ(j.reasoning_len, 4u);
}

}  // namespace
}  // namespace pairadv
