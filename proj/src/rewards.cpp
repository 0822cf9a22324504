#include "pairadv/rewards.hpp"

#include "pairadv/errors.hpp"

namespace pairadv {

double binary_reward(const PreferenceLabel& predicted, const PreferenceLabel& gold) {
  if (!predicted.is_binary() || !gold.is_binary()) throw KindMismatch("binary_reward needs two binary labels");
  return predicted == gold ? 1.0 : 0.0;
}

double multiclass_reward(const PreferenceLabel& predicted, const PreferenceLabel& gold) {
  if (predicted.is_binary() || gold.is_binary()) throw KindMismatch("multiclass_reward needs two multiclass labels");
  if (predicted == gold) return 1.0;
  return label_sign(predicted) == label_sign(gold) ? 0.5 : 0.0;
}

double rule_reward(const std::optional<PreferenceLabel>& predicted, const PreferenceLabel& gold) {
  if (!predicted) return 0.0;
  return gold.is_binary() ? binary_reward(*predicted, gold) : multiclass_reward(*predicted, gold);
}

}  // namespace pairadv
