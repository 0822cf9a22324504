#include "pairadv/judge.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <omp.h>

#include "pairadv/errors.hpp"

namespace pairadv {
namespace {

// Synthetic reasoning: `len` whitespace-separated tokens.
std::string filler(std::size_t len) {
  static const std::string kWord = "think ";
  std::string out;
  if (len == 0) return out;
  out.reserve(len * kWord.size());
  for (std::size_t i = 0; i < len; ++i) out += kWord;
  out.pop_back();
  return out;
}

std::size_t label_index(const PreferenceLabel& l) {
  if (l.is_binary()) return l.binary_value() == BinaryChoice::A ? 0 : 1;
  const int v = l.multiclass_value();
  return static_cast<std::size_t>(v < 0 ? v + 3 : v + 2);
}

PreferenceLabel label_at(LabelKind kind, std::size_t index) {
  if (kind == LabelKind::Binary) return PreferenceLabel::binary(index == 0 ? BinaryChoice::A : BinaryChoice::B);
  return PreferenceLabel::multiclass(multiclass_scale()[index]);
}

// Uniform pick among the indices in `candidates` (already in canonical order).
std::size_t pick(const std::vector<std::size_t>& candidates, Rng& rng) {
  if (candidates.size() == 1) return candidates.front();
  return candidates[rng.below(candidates.size())];
}

// Indices in [begin, end) whose count equals the maximum over that range.
std::vector<std::size_t> argmax(const std::array<std::size_t, 6>& counts, std::size_t begin, std::size_t end) {
  std::size_t best = 0;
  for (std::size_t i = begin; i < end; ++i) best = std::max(best, counts[i]);
  std::vector<std::size_t> out;
  for (std::size_t i = begin; i < end; ++i) {
    if (counts[i] == best) out.push_back(i);
  }
  return out;
}

}  // namespace

void validate(const SimJudgeConfig& cfg) {
  if (!(cfg.p_max > 0.5 && cfg.p_max <= 1.0)) {
    // p_max = 0.5 is the degenerate pure-noise judge; allow it for experiments.
    if (cfg.p_max != 0.5) throw ConfigError("judge.p_max must be in (0.5, 1]");
  }
  if (!(cfg.kappa > 0.0)) throw ConfigError("judge.kappa must be > 0");
  if (!(cfg.lambda > 0.0)) throw ConfigError("judge.lambda must be > 0");
  if (cfg.len_min > cfg.len_max) throw ConfigError("judge.len_min must be <= judge.len_max");
  if (cfg.mag2_gap > cfg.mag3_gap) throw ConfigError("judge.mag2_gap must be <= judge.mag3_gap");
}

double sim_correct_probability(double gap, const SimJudgeConfig& cfg) {
  return 0.5 + (cfg.p_max - 0.5) * (1.0 - std::exp(-cfg.kappa * gap));
}

std::size_t sim_reasoning_len(double gap, const SimJudgeConfig& cfg) {
  const double span = static_cast<double>(cfg.len_max - cfg.len_min);
  return static_cast<std::size_t>(std::llround(static_cast<double>(cfg.len_min) + span * std::exp(-cfg.lambda * gap)));
}

int sim_magnitude(double gap, const SimJudgeConfig& cfg) {
  if (gap < cfg.mag2_gap) return 1;
  if (gap < cfg.mag3_gap) return 2;
  return 3;
}

Judgment sim_judge(const PreferenceExample& ex, double true_gap, const SimJudgeConfig& cfg, Rng& rng) {
  if (!(true_gap >= 0.0)) throw NegativeGap(true_gap);
  const bool correct = rng.bernoulli(sim_correct_probability(true_gap, cfg));
  const int gold_sign = label_sign(ex.gold_label);
  const int sign = correct ? gold_sign : -gold_sign;

  Judgment j;
  if (ex.gold_label.is_binary()) {
    j.label = PreferenceLabel::binary(sign < 0 ? BinaryChoice::A : BinaryChoice::B);
  } else {
    j.label = PreferenceLabel::multiclass(sign * sim_magnitude(true_gap, cfg));
  }
  j.reasoning_len = sim_reasoning_len(true_gap, cfg);
  j.reasoning = filler(j.reasoning_len);
  return j;
}

SimulatedJudge::SimulatedJudge(SimJudgeConfig cfg) : cfg_(cfg) { validate(cfg_); }

Judgment SimulatedJudge::judge(LabelKind kind, const PreferenceExample& ex, double true_gap, Rng& rng) const {
  // Mixing in the judge's own seed lets two judges share a caller stream.
  Rng local = rng.substream(cfg_.seed);
  if (ex.gold_label.kind() == kind) return sim_judge(ex, true_gap, cfg_, local);
  // Re-express the truth in the requested kind; only the direction matters.
  PreferenceExample as_kind = ex;
  const int s = label_sign(ex.gold_label);
  as_kind.gold_label = kind == LabelKind::Binary ? PreferenceLabel::binary(s < 0 ? BinaryChoice::A : BinaryChoice::B)
                                                 : PreferenceLabel::multiclass(s);
  return sim_judge(as_kind, true_gap, cfg_, local);
}

Judgment judge_with_retries(const Judge& judge, LabelKind kind, const PreferenceExample& ex, double true_gap,
                            const CallPolicy& policy, const Rng& rng) {
  for (std::size_t attempt = 0;; ++attempt) {
    Rng draw = rng.substream(static_cast<std::uint64_t>(attempt));
    try {
      return judge.judge(kind, ex, true_gap, draw);
    } catch (const JudgeError&) {
      if (attempt >= policy.max_retries) throw;
    }
  }
}

int call_threads(const Judge& judge, const CallPolicy& policy) {
  const auto limit = std::max<std::size_t>(policy.max_inflight, 1);
  if (judge.io_bound()) return static_cast<int>(limit);
  return static_cast<int>(std::min<std::size_t>(limit, static_cast<std::size_t>(omp_get_max_threads())));
}

void validate(const VoteConfig& cfg) {
  if (cfg.m < 1) throw ConfigError("vote.m must be >= 1");
}

PreferenceLabel majority_vote(std::span<const Judgment> judgments, const VoteConfig& cfg, Rng& rng) {
  validate(cfg);
  if (judgments.empty()) throw EmptyBallot();
  const LabelKind kind = judgments.front().label.kind();
  std::array<std::size_t, 6> counts{};
  for (const auto& j : judgments) {
    if (j.label.kind() != kind) throw KindMismatch("ballot mixes binary and multiclass labels");
    ++counts[label_index(j.label)];
  }

  if (kind == LabelKind::Binary) return label_at(kind, pick(argmax(counts, 0, 2), rng));

  const std::size_t n = judgments.size();
  for (std::size_t i = 0; i < 6; ++i) {
    if (2 * counts[i] > n) return label_at(kind, i);
  }
  const std::size_t negative = counts[0] + counts[1] + counts[2];
  const std::size_t positive = n - negative;
  bool use_negative;
  if (negative != positive) {
    use_negative = negative > positive;
  } else {
    use_negative = rng.below(2) == 0;
  }
  return label_at(kind, pick(use_negative ? argmax(counts, 0, 3) : argmax(counts, 3, 6), rng));
}

VoteOutcome sample_and_vote(const Judge& judge, LabelKind kind, const PreferenceExample& ex, double true_gap,
                            const VoteConfig& cfg, const Rng& rng) {
  validate(cfg);
  VoteOutcome out;
  out.ballot.reserve(cfg.m);
  for (std::size_t k = 0; k < cfg.m; ++k) {
    Rng draw = rng.substream(static_cast<std::uint64_t>(k));
    try {
      out.ballot.push_back(judge.judge(kind, ex, true_gap, draw));
    } catch (const JudgeError& e) {
      if (e.reason() != JudgeError::Reason::Parse) throw;
      ++out.parse_errors;
    }
  }
  if (!out.ballot.empty()) {
    Rng tie = rng.substream("tie");
    out.label = majority_vote(out.ballot, cfg, tie);
  }
  return out;
}

}  // namespace pairadv
