#pragma once

// Domain types shared by every module: preference labels, preference
// examples, judgments and pre-generated reasoning trajectories.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pairadv {

enum class LabelKind { Binary, Multiclass };

enum class BinaryChoice { A, B };

std::string_view to_string(LabelKind kind);
LabelKind label_kind_from_string(std::string_view s);

// A judge verdict on a pair (y_a, y_b). Binary labels name the preferred
// response; multiclass labels are a signed strength in {-3,-2,-1,1,2,3},
// negative favoring y_a.
class PreferenceLabel {
 public:
  static PreferenceLabel binary(BinaryChoice choice) { return PreferenceLabel(LabelKind::Binary, choice, 0); }
  // Throws ValidationError("label") for values outside {-3..3}\{0}.
  static PreferenceLabel multiclass(int value);

  LabelKind kind() const noexcept { return kind_; }
  bool is_binary() const noexcept { return kind_ == LabelKind::Binary; }
  // Precondition: is_binary().
  BinaryChoice binary_value() const noexcept { return choice_; }
  // Precondition: !is_binary().
  int multiclass_value() const noexcept { return value_; }

  // Wire form of the value: "A"/"B" or the decimal integer.
  std::string value_string() const;

  friend bool operator==(const PreferenceLabel& a, const PreferenceLabel& b) {
    if (a.kind_ != b.kind_) return false;
    return a.is_binary() ? a.choice_ == b.choice_ : a.value_ == b.value_;
  }

 private:
  PreferenceLabel(LabelKind kind, BinaryChoice choice, int value) : kind_(kind), choice_(choice), value_(value) {}

  LabelKind kind_;
  BinaryChoice choice_;
  int value_;
};

// All eight valid labels, binary first.
const std::array<PreferenceLabel, 8>& all_labels();
const std::array<int, 6>& multiclass_scale();

// -1 when the label favors y_a, +1 when it favors y_b. Binary A maps to -1 so
// that both label kinds share the "negative favors y_a" convention.
int label_sign(const PreferenceLabel& label) noexcept;

// The label pointing the other way: A<->B, s -> -s.
PreferenceLabel flipped(const PreferenceLabel& label) noexcept;

struct PreferenceExample {
  std::string id;
  std::string context;
  std::string response_a;
  std::string response_b;
  PreferenceLabel gold_label = PreferenceLabel::binary(BinaryChoice::A);
};

// Throws ValidationError naming the first violated field.
void validate_example(const PreferenceExample& ex);

// Throws ValidationError("id") on duplicate ids, else validates each example.
void validate_dataset(const std::vector<PreferenceExample>& examples);

struct Judgment {
  std::string reasoning;
  std::size_t reasoning_len = 0;
  PreferenceLabel label = PreferenceLabel::binary(BinaryChoice::A);
};

struct TrajectoryRecord {
  std::string example_id;
  std::string reasoning;
  std::size_t reasoning_len = 0;
  PreferenceLabel predicted_label = PreferenceLabel::binary(BinaryChoice::A);
};

// How reasoning length |R| is measured. Whitespace-delimited words are the
// default; characters are available for byte-level judges.
enum class TokenConvention { Whitespace, Characters };

std::size_t count_tokens(std::string_view text, TokenConvention convention = TokenConvention::Whitespace);

struct Turn {
  std::string role;  // "user" or "assistant"
  std::string content;
};

// Flattens a multi-turn conversation into the single context slot as
// "User: ...\nAssistant: ..." lines.
std::string flatten_turns(const std::vector<Turn>& turns);

}  // namespace pairadv
