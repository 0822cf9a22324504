#pragma once

#include <optional>

#include "pairadv/model.hpp"

namespace pairadv {

// Accuracy-only rule rewards.
//   binary:     1.0 exact, 0.0 otherwise
//   multiclass: 1.0 exact, 0.5 same sign, 0.0 otherwise
// Both throw KindMismatch when a label has the wrong kind.
double binary_reward(const PreferenceLabel& predicted, const PreferenceLabel& gold);
double multiclass_reward(const PreferenceLabel& predicted, const PreferenceLabel& gold);

// Dispatches on gold's kind. A missing prediction (judge output that did not
// parse) scores 0.0.
double rule_reward(const std::optional<PreferenceLabel>& predicted, const PreferenceLabel& gold);

}  // namespace pairadv
