#pragma once

// Judge abstraction and its three realizations: a simulated generative
// reward model, an OpenAI-compatible remote chat-completion judge, and
// majority voting over sampled judgments.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairadv/model.hpp"
#include "pairadv/rng.hpp"
#include "pairadv/template.hpp"

namespace pairadv {

struct SimJudgeConfig {
  double p_max = 0.95;   // asymptotic accuracy, in (0.5, 1]
  double kappa = 10.0;   // how fast accuracy saturates with the reward gap
  std::size_t len_min = 64;
  std::size_t len_max = 1024;
  double lambda = 5.0;   // reasoning-length decay with the reward gap
  // Multiclass magnitude: 1 below mag2_gap, 2 below mag3_gap, else 3.
  double mag2_gap = 0.2;
  double mag3_gap = 0.5;
  std::uint64_t seed = 0;
};

void validate(const SimJudgeConfig& cfg);

// 0.5 + (p_max - 0.5) * (1 - exp(-kappa * gap)).
double sim_correct_probability(double gap, const SimJudgeConfig& cfg);
// round(len_min + (len_max - len_min) * exp(-lambda * gap)).
std::size_t sim_reasoning_len(double gap, const SimJudgeConfig& cfg);
int sim_magnitude(double gap, const SimJudgeConfig& cfg);

// Simulated judgment of `ex`, whose gold label says which response is truly
// preferred (and its kind). `true_gap` is r*(preferred) - r*(other).
// Consumes exactly one uniform draw from `rng`. Throws NegativeGap.
Judgment sim_judge(const PreferenceExample& ex, double true_gap, const SimJudgeConfig& cfg, Rng& rng);

// A pairwise judge. `ex` carries the two responses in the A/B roles; for
// simulated judges its gold_label and `true_gap` describe the ground truth,
// remote judges ignore both. Implementations must be safe to call
// concurrently with distinct `rng` streams. Throws JudgeError.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual Judgment judge(LabelKind kind, const PreferenceExample& ex, double true_gap, Rng& rng) const = 0;
  // Calls that mostly wait on a network may run more threads than cores.
  virtual bool io_bound() const noexcept { return false; }
};

class SimulatedJudge final : public Judge {
 public:
  explicit SimulatedJudge(SimJudgeConfig cfg);
  Judgment judge(LabelKind kind, const PreferenceExample& ex, double true_gap, Rng& rng) const override;
  const SimJudgeConfig& config() const noexcept { return cfg_; }

 private:
  SimJudgeConfig cfg_;
};

struct RemoteJudgeConfig {
  std::string url;    // full endpoint, e.g. http://localhost:8000/v1/chat/completions
  std::string model = "judge";
  std::string token;  // sent as a Bearer token when non-empty
  double temperature = 0.6;
  double top_p = 1.0;  // sent only when != 1.0
  int max_tokens = 2048;
  int timeout_seconds = 120;
  TokenConvention tokens = TokenConvention::Whitespace;
};

// Fills url/token from PAIRADV_JUDGE_URL / PAIRADV_JUDGE_TOKEN when set.
void apply_judge_env(RemoteJudgeConfig& cfg);

// Chat-completion request body for one rendered instruction.
nlohmann::json chat_request_body(const TaskInstruction& instruction, const RemoteJudgeConfig& cfg);
// choices[0].message.content; throws JudgeError{Transport} if absent.
std::string chat_response_content(const std::string& body);

// One request, no retries. Throws JudgeError{Transport} or JudgeError{Parse}.
Judgment remote_judge(const PreferenceExample& ex, LabelKind kind, const RemoteJudgeConfig& cfg);

class RemoteJudge final : public Judge {
 public:
  explicit RemoteJudge(RemoteJudgeConfig cfg);
  Judgment judge(LabelKind kind, const PreferenceExample& ex, double true_gap, Rng& rng) const override;
  bool io_bound() const noexcept override { return true; }
  const RemoteJudgeConfig& config() const noexcept { return cfg_; }

 private:
  RemoteJudgeConfig cfg_;
};

// Retry and concurrency limits for batches of judge calls.
struct CallPolicy {
  std::size_t max_retries = 2;
  std::size_t max_inflight = 4;
};

// Threads for a batch of calls: max_inflight for network judges, otherwise
// also capped by the OpenMP thread limit.
int call_threads(const Judge& judge, const CallPolicy& policy);

// Up to 1 + max_retries attempts, attempt k drawing from substream k of
// `rng`. Rethrows the last JudgeError.
Judgment judge_with_retries(const Judge& judge, LabelKind kind, const PreferenceExample& ex, double true_gap,
                            const CallPolicy& policy, const Rng& rng);

enum class TieBreak { SeededRandom };

struct VoteConfig {
  std::size_t m = 1;
  TieBreak tie_break = TieBreak::SeededRandom;
};

void validate(const VoteConfig& cfg);

// Label with the most votes. Multiclass: a value holding a strict majority
// wins outright; otherwise the majority sign is chosen first and the most
// voted value within it wins. Ties are broken uniformly with `rng` over
// candidates in canonical label order, so the result does not depend on
// ballot order. Throws EmptyBallot or KindMismatch.
PreferenceLabel majority_vote(std::span<const Judgment> judgments, const VoteConfig& cfg, Rng& rng);

struct VoteOutcome {
  std::optional<PreferenceLabel> label;  // empty when every judgment failed
  std::size_t parse_errors = 0;
  std::vector<Judgment> ballot;
};

// Samples cfg.m judgments (substreams 0..m-1 of `rng`), drops those that fail
// with JudgeError{Parse}, and votes with the "tie" substream.
VoteOutcome sample_and_vote(const Judge& judge, LabelKind kind, const PreferenceExample& ex, double true_gap,
                            const VoteConfig& cfg, const Rng& rng);

}  // namespace pairadv
