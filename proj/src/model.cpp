#include "pairadv/model.hpp"

#include <cctype>
#include <unordered_set>

#include "pairadv/errors.hpp"

namespace pairadv {

std::string_view to_string(LabelKind kind) { return kind == LabelKind::Binary ? "binary" : "multiclass"; }

LabelKind label_kind_from_string(std::string_view s) {
  if (s == "binary") return LabelKind::Binary;
  if (s == "multiclass") return LabelKind::Multiclass;
  throw ValidationError("kind");
}

PreferenceLabel PreferenceLabel::multiclass(int value) {
  if (value == 0 || value < -3 || value > 3) throw ValidationError("label");
  return PreferenceLabel(LabelKind::Multiclass, BinaryChoice::A, value);
}

std::string PreferenceLabel::value_string() const {
  if (is_binary()) return choice_ == BinaryChoice::A ? "A" : "B";
  return std::to_string(value_);
}

const std::array<int, 6>& multiclass_scale() {
  static const std::array<int, 6> scale{-3, -2, -1, 1, 2, 3};
  return scale;
}

const std::array<PreferenceLabel, 8>& all_labels() {
  static const std::array<PreferenceLabel, 8> labels{
      PreferenceLabel::binary(BinaryChoice::A), PreferenceLabel::binary(BinaryChoice::B),
      PreferenceLabel::multiclass(-3),          PreferenceLabel::multiclass(-2),
      PreferenceLabel::multiclass(-1),          PreferenceLabel::multiclass(1),
      PreferenceLabel::multiclass(2),           PreferenceLabel::multiclass(3)};
  return labels;
}

int label_sign(const PreferenceLabel& label) noexcept {
  if (label.is_binary()) return label.binary_value() == BinaryChoice::A ? -1 : 1;
  return label.multiclass_value() < 0 ? -1 : 1;
}

PreferenceLabel flipped(const PreferenceLabel& label) noexcept {
  if (label.is_binary()) {
    return PreferenceLabel::binary(label.binary_value() == BinaryChoice::A ? BinaryChoice::B : BinaryChoice::A);
  }
  return PreferenceLabel::multiclass(-label.multiclass_value());
}

void validate_example(const PreferenceExample& ex) {
  if (ex.id.empty()) throw ValidationError("id");
  if (ex.context.empty()) throw ValidationError("context");
  if (ex.response_a.empty()) throw ValidationError("response_a");
  if (ex.response_b.empty()) throw ValidationError("response_b");
  const auto& g = ex.gold_label;
  if (!g.is_binary() && (g.multiclass_value() == 0 || g.multiclass_value() < -3 || g.multiclass_value() > 3)) {
    throw ValidationError("gold_label");
  }
}

void validate_dataset(const std::vector<PreferenceExample>& examples) {
  std::unordered_set<std::string> seen;
  for (const auto& ex : examples) {
    validate_example(ex);
    if (!seen.insert(ex.id).second) throw ValidationError("id");
  }
}

std::size_t count_tokens(std::string_view text, TokenConvention convention) {
  if (convention == TokenConvention::Characters) return text.size();
  std::size_t count = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++count;
    in_word = !space;
  }
  return count;
}

std::string flatten_turns(const std::vector<Turn>& turns) {
  std::string out;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    if (i > 0) out += '\n';
    out += turns[i].role == "assistant" ? "Assistant: " : "User: ";
    out += turns[i].content;
  }
  return out;
}

}  // namespace pairadv
