#pragma once

// Tabular softmax sequence policies with exact log-probabilities, KL and
// gradients, plus the GRPO update and the toy training loops built on it.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pairadv/advantage.hpp"
#include "pairadv/curation.hpp"
#include "pairadv/judge.hpp"
#include "pairadv/model.hpp"
#include "pairadv/rng.hpp"

namespace pairadv {

using Sequence = std::vector<int>;

// Position-factorized policy: token t ~ softmax(logits[t, :]) independently
// for each of seq_len positions.
class SeqPolicy {
 public:
  SeqPolicy() = default;
  // Uniform policy (all-zero logits).
  SeqPolicy(std::size_t vocab_size, std::size_t seq_len);
  SeqPolicy(std::size_t vocab_size, std::size_t seq_len, std::vector<double> logits);

  std::size_t vocab_size() const noexcept { return vocab_; }
  std::size_t seq_len() const noexcept { return len_; }
  std::size_t num_params() const noexcept { return logits_.size(); }

  std::span<const double> logits() const noexcept { return logits_; }
  std::span<double> logits() noexcept { return logits_; }
  double logit(std::size_t t, std::size_t v) const { return logits_[t * vocab_ + v]; }
  double& logit(std::size_t t, std::size_t v) { return logits_[t * vocab_ + v]; }

  std::vector<double> probs(std::size_t t) const;
  std::vector<double> log_probs(std::size_t t) const;

  Sequence sample(Rng& rng, double temperature = 1.0) const;

  friend bool operator==(const SeqPolicy&, const SeqPolicy&) = default;

 private:
  std::size_t vocab_ = 0;
  std::size_t len_ = 0;
  std::vector<double> logits_;
};

// Sum of per-position log-probabilities; |y| must equal seq_len. Throws
// BadSequence.
double seq_logprob(const SeqPolicy& p, std::span<const int> y);

// Same over the first |y| <= seq_len positions.
double prefix_logprob(const SeqPolicy& p, std::span<const int> y);

// Gradient of seq_logprob with respect to the logits, in logits layout.
std::vector<double> seq_logprob_grad(const SeqPolicy& p, std::span<const int> y);

struct SftLoss {
  double reasoning_nll = 0.0;
  double label_nll = 0.0;
  double total() const { return reasoning_nll + label_nll; }
};

// Negative log-likelihood of an encoded warm-up trajectory (reasoning tokens
// followed by one label token) under the first |encoded| positions.
SftLoss sft_loss(const SeqPolicy& p, std::span<const int> encoded);
std::vector<double> sft_loss_grad(const SeqPolicy& p, std::span<const int> encoded);

// Sum over positions of KL(softmax(p_t) || softmax(ref_t)). Throws
// ShapeMismatch.
double kl_exact(const SeqPolicy& p, const SeqPolicy& ref);
// Gradient of kl_exact with respect to p's logits.
std::vector<double> kl_exact_grad(const SeqPolicy& p, const SeqPolicy& ref);

struct TrainConfig {
  std::size_t group_size = 8;
  double clip_eps = 0.2;
  double kl_beta = 1e-4;
  AdvConfig adv;
  double lr = 0.5;
  std::size_t steps = 200;
  std::uint64_t seed = 0;
  std::size_t rollout_batch = 4;  // prompts (groups) per step
  std::size_t inner_epochs = 1;   // gradient steps per batch of rollouts
  double temperature = 1.0;       // rollout sampling temperature
};

void validate(const TrainConfig& cfg);

struct Sample {
  Sequence tokens;
  double advantage = 0.0;
};

struct SurrogateValue {
  double objective = 0.0;  // clipped term minus kl_beta * KL
  double clip_frac = 0.0;  // share of samples where the clip is binding
  double kl = 0.0;
};

// mean_n min(ratio_n * A_n, clip(ratio_n, 1-eps, 1+eps) * A_n)
//   - kl_beta * kl_exact(new, ref),  ratio_n = exp(logp_new - logp_old).
// An objective to maximize. Throws ShapeMismatch.
SurrogateValue clipped_surrogate(const SeqPolicy& current, const SeqPolicy& old, const SeqPolicy& ref,
                                 std::span<const Sample> samples, const TrainConfig& cfg);
// Gradient of clipped_surrogate(...).objective with respect to current's
// logits. Samples whose clip is binding contribute zero.
std::vector<double> clipped_surrogate_grad(const SeqPolicy& current, const SeqPolicy& old, const SeqPolicy& ref,
                                           std::span<const Sample> samples, const TrainConfig& cfg);

// Hidden-target task: true_reward(y) = sum_t w_t [y_t = target_t] / sum_t w_t.
class SyntheticTask {
 public:
  SyntheticTask(std::vector<int> target, std::vector<double> weights, std::size_t vocab_size);
  // Random target and positive weights drawn from `seed`.
  static SyntheticTask random(std::size_t vocab_size, std::size_t seq_len, std::uint64_t seed);

  std::size_t vocab_size() const noexcept { return vocab_; }
  std::size_t seq_len() const noexcept { return target_.size(); }
  const std::vector<int>& target() const noexcept { return target_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  double true_reward(std::span<const int> y) const;
  // E_{y ~ p}[true_reward(y)], exact.
  double expected_true_reward(const SeqPolicy& p) const;
  // Text form shown to judges, e.g. "t3 t0 t7 t1".
  std::string render(std::span<const int> y) const;

 private:
  std::vector<int> target_;
  std::vector<double> weights_;
  double weight_sum_ = 0.0;
  std::size_t vocab_ = 0;
};

// Toy judge for rule-based RL: the last token of a sequence is its verdict,
// using the label ids of Vocabulary (0 = A, 1 = B, 2..7 = -3..-1, 1..3). Ids of
// the other kind, or outside 0..7, do not parse and score 0.
struct JudgeRlTask {
  PreferenceLabel gold;
  std::size_t vocab_size = 8;
  std::size_t seq_len = 3;

  std::optional<PreferenceLabel> decode(std::span<const int> y) const;
  double reward(std::span<const int> y) const;
  double expected_reward(const SeqPolicy& p) const;
};

enum class AdvMode { PointwiseRule, PairwiseMatrix };

// Where rewards and preferences come from during a step.
struct StepEnv {
  // Ground truth for metrics and simulated judges.
  std::function<double(std::span<const int>)> true_reward;
  // Exact E[true_reward] under a policy; sample mean is used when empty.
  std::function<double(const SeqPolicy&)> expected_true_reward;
  // PointwiseRule: per-sample reward (rule-based or a possibly noisy oracle).
  std::function<double(std::span<const int>, Rng&)> reward;
  // PairwiseMatrix: judge, label kind and response renderer.
  const Judge* judge = nullptr;
  MatrixConfig matrix;
  std::string context = "Generate the hidden target sequence.";
  std::function<std::string(std::span<const int>)> render;
};

struct StepMetrics {
  std::size_t step = 0;
  double mean_true_reward = 0.0;  // of the pre-update policy
  double mean_reward = 0.0;       // pointwise rewards seen; NaN in pairwise mode
  double mean_abs_adv = 0.0;
  double clip_frac = 0.0;
  double kl = 0.0;                // kl_exact(pre-update policy, ref)
  std::size_t judge_errors = 0;   // pairs left at d_ij = 0
};

struct StepResult {
  SeqPolicy policy;
  StepMetrics metrics;
  std::vector<PreferenceMatrix> matrices;  // pairwise mode only
};

// Samples rollout_batch groups of group_size sequences from `policy`, scores
// them, computes advantages and takes inner_epochs gradient-ascent steps of
// size lr on the clipped surrogate. Group b uses substreams of `rng` keyed by
// b, so the result is independent of thread count.
StepResult grpo_step(const SeqPolicy& policy, const SeqPolicy& ref, const StepEnv& env, const TrainConfig& cfg,
                     AdvMode mode, const Rng& rng);

struct RunResult {
  // One row per step, plus a final evaluation-only row at step = cfg.steps.
  std::vector<StepMetrics> metrics;
  SeqPolicy final_policy;
  std::vector<PreferenceMatrix> last_matrices;

  double initial_true_reward() const { return metrics.front().mean_true_reward; }
  double final_true_reward() const { return metrics.back().mean_true_reward; }
};

// Runs cfg.steps GRPO steps from a uniform policy (which is also the KL
// reference). Step s draws from Rng(cfg.seed).substream("train", s).
RunResult train(const StepEnv& env, std::size_t vocab_size, std::size_t seq_len, const TrainConfig& cfg,
                AdvMode mode);

struct RlhfOptions {
  LabelKind kind = LabelKind::Binary;
  RoleAssignment roles = RoleAssignment::LowerIndexFirst;
  CallPolicy calls;
  double reward_noise = 0.0;  // std of Gaussian noise on pointwise rewards
};

// Pointwise mode optimizes the (optionally noisy) true reward; pairwise mode
// sees only the judge's preference matrices.
RunResult train_rlhf(const SyntheticTask& task, const Judge* judge, const TrainConfig& cfg, AdvMode mode,
                     const RlhfOptions& opts = {});

// Rule-based RL of the toy judge policy.
RunResult train_judge_rl(const JudgeRlTask& task, const TrainConfig& cfg);

// Word-level vocabulary for encoding warm-up trajectories. Ids 0..7 are the
// label tokens (A, B, -3, -2, -1, 1, 2, 3); words get ids from 8 on.
class Vocabulary {
 public:
  static constexpr int kFirstWordId = 8;

  int label_token(const PreferenceLabel& label) const;
  // Adds unseen words.
  Sequence encode(const WarmupExample& w);
  std::size_t size() const noexcept { return kFirstWordId + words_.size(); }

 private:
  std::unordered_map<std::string, int> words_;
};

struct SftResult {
  SeqPolicy policy;
  std::vector<double> loss;  // mean total NLL before each epoch, plus final
};

// Full-batch gradient descent on the mean sft_loss of `encoded`.
SftResult sft_train(const std::vector<Sequence>& encoded, std::size_t vocab_size, std::size_t seq_len, double lr,
                    std::size_t epochs);

}  // namespace pairadv
