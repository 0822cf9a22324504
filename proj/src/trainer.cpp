#include "pairadv/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>

#include "pairadv/errors.hpp"
#include "pairadv/rewards.hpp"

namespace pairadv {
namespace {

double log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

void check_tokens(const SeqPolicy& p, std::span<const int> y, std::size_t max_len) {
  if (y.size() > max_len) throw BadSequence("sequence longer than the policy");
  for (int tok : y) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= p.vocab_size()) {
      throw BadSequence("token " + std::to_string(tok) + " outside vocabulary of " + std::to_string(p.vocab_size()));
    }
  }
}

void check_same_shape(const SeqPolicy& a, const SeqPolicy& b) {
  if (a.vocab_size() != b.vocab_size() || a.seq_len() != b.seq_len()) {
    throw ShapeMismatch("policies differ in vocabulary size or sequence length");
  }
}

// d/dlogits of sum_t log p_t(y_t) over the first |y| positions, scaled and
// accumulated into `grad`.
void accumulate_logprob_grad(const SeqPolicy& p, std::span<const int> y, double scale, std::vector<double>& grad) {
  const std::size_t v = p.vocab_size();
  for (std::size_t t = 0; t < y.size(); ++t) {
    const auto probs = p.probs(t);
    double* row = grad.data() + t * v;
    for (std::size_t k = 0; k < v; ++k) row[k] -= scale * probs[k];
    row[y[t]] += scale;
  }
}

double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

}  // namespace

SeqPolicy::SeqPolicy(std::size_t vocab_size, std::size_t seq_len)
    : vocab_(vocab_size), len_(seq_len), logits_(vocab_size * seq_len, 0.0) {}

SeqPolicy::SeqPolicy(std::size_t vocab_size, std::size_t seq_len, std::vector<double> logits)
    : vocab_(vocab_size), len_(seq_len), logits_(std::move(logits)) {
  if (logits_.size() != vocab_ * len_) throw ShapeMismatch("logits must have vocab_size * seq_len entries");
}

std::vector<double> SeqPolicy::log_probs(std::size_t t) const {
  const std::span<const double> row(logits_.data() + t * vocab_, vocab_);
  const double lse = log_sum_exp(row);
  std::vector<double> out(vocab_);
  for (std::size_t k = 0; k < vocab_; ++k) out[k] = row[k] - lse;
  return out;
}

std::vector<double> SeqPolicy::probs(std::size_t t) const {
  auto out = log_probs(t);
  for (double& x : out) x = std::exp(x);
  return out;
}

Sequence SeqPolicy::sample(Rng& rng, double temperature) const {
  Sequence y(len_);
  std::vector<double> scaled(vocab_);
  for (std::size_t t = 0; t < len_; ++t) {
    for (std::size_t k = 0; k < vocab_; ++k) scaled[k] = logit(t, k) / temperature;
    const double lse = log_sum_exp(scaled);
    const double u = rng.uniform();
    double cdf = 0.0;
    std::size_t pick = vocab_ - 1;
    for (std::size_t k = 0; k < vocab_; ++k) {
      cdf += std::exp(scaled[k] - lse);
      if (u < cdf) {
        pick = k;
        break;
      }
    }
    y[t] = static_cast<int>(pick);
  }
  return y;
}

double prefix_logprob(const SeqPolicy& p, std::span<const int> y) {
  check_tokens(p, y, p.seq_len());
  double lp = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) lp += p.log_probs(t)[y[t]];
  return lp;
}

double seq_logprob(const SeqPolicy& p, std::span<const int> y) {
  if (y.size() != p.seq_len()) throw BadSequence("sequence length must equal the policy length");
  return prefix_logprob(p, y);
}

std::vector<double> seq_logprob_grad(const SeqPolicy& p, std::span<const int> y) {
  if (y.size() != p.seq_len()) throw BadSequence("sequence length must equal the policy length");
  check_tokens(p, y, p.seq_len());
  std::vector<double> grad(p.num_params(), 0.0);
  accumulate_logprob_grad(p, y, 1.0, grad);
  return grad;
}

SftLoss sft_loss(const SeqPolicy& p, std::span<const int> encoded) {
  if (encoded.empty()) throw BadSequence("empty warm-up sequence");
  check_tokens(p, encoded, p.seq_len());
  SftLoss loss;
  const std::size_t n = encoded.size();
  loss.reasoning_nll = -prefix_logprob(p, encoded.first(n - 1));
  loss.label_nll = -p.log_probs(n - 1)[encoded[n - 1]];
  return loss;
}

std::vector<double> sft_loss_grad(const SeqPolicy& p, std::span<const int> encoded) {
  if (encoded.empty()) throw BadSequence("empty warm-up sequence");
  check_tokens(p, encoded, p.seq_len());
  std::vector<double> grad(p.num_params(), 0.0);
  accumulate_logprob_grad(p, encoded, -1.0, grad);
  return grad;
}

double kl_exact(const SeqPolicy& p, const SeqPolicy& ref) {
  check_same_shape(p, ref);
  double kl = 0.0;
  for (std::size_t t = 0; t < p.seq_len(); ++t) {
    const auto lp = p.log_probs(t);
    const auto lr = ref.log_probs(t);
    for (std::size_t k = 0; k < p.vocab_size(); ++k) kl += std::exp(lp[k]) * (lp[k] - lr[k]);
  }
  return std::max(kl, 0.0);
}

std::vector<double> kl_exact_grad(const SeqPolicy& p, const SeqPolicy& ref) {
  check_same_shape(p, ref);
  const std::size_t v = p.vocab_size();
  std::vector<double> grad(p.num_params(), 0.0);
  for (std::size_t t = 0; t < p.seq_len(); ++t) {
    const auto lp = p.log_probs(t);
    const auto lr = ref.log_probs(t);
    double kl_t = 0.0;
    for (std::size_t k = 0; k < v; ++k) kl_t += std::exp(lp[k]) * (lp[k] - lr[k]);
    for (std::size_t k = 0; k < v; ++k) grad[t * v + k] = std::exp(lp[k]) * (lp[k] - lr[k] - kl_t);
  }
  return grad;
}

void validate(const TrainConfig& cfg) {
  if (cfg.group_size < 2) throw ConfigError("train.group_size must be >= 2");
  if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0)) throw ConfigError("train.clip_eps must be in (0, 1)");
  if (!(cfg.kl_beta >= 0.0)) throw ConfigError("train.kl_beta must be >= 0");
  if (!(cfg.lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (cfg.rollout_batch < 1) throw ConfigError("train.rollout_batch must be >= 1");
  if (cfg.inner_epochs < 1) throw ConfigError("train.inner_epochs must be >= 1");
  if (!(cfg.temperature > 0.0)) throw ConfigError("train.temperature must be > 0");
  validate(cfg.adv);
}

SurrogateValue clipped_surrogate(const SeqPolicy& current, const SeqPolicy& old, const SeqPolicy& ref,
                                 std::span<const Sample> samples, const TrainConfig& cfg) {
  check_same_shape(current, old);
  SurrogateValue out;
  out.kl = kl_exact(current, ref);
  if (!samples.empty()) {
    double sum = 0.0;
    std::size_t clipped = 0;
    for (const auto& s : samples) {
      const double ratio = std::exp(seq_logprob(current, s.tokens) - seq_logprob(old, s.tokens));
      const double plain = ratio * s.advantage;
      const double bounded = clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * s.advantage;
      if (bounded < plain) ++clipped;
      sum += std::min(plain, bounded);
    }
    const auto n = static_cast<double>(samples.size());
    out.objective = sum / n;
    out.clip_frac = static_cast<double>(clipped) / n;
  }
  out.objective -= cfg.kl_beta * out.kl;
  return out;
}

std::vector<double> clipped_surrogate_grad(const SeqPolicy& current, const SeqPolicy& old, const SeqPolicy& ref,
                                           std::span<const Sample> samples, const TrainConfig& cfg) {
  check_same_shape(current, old);
  std::vector<double> grad(current.num_params(), 0.0);
  if (!samples.empty()) {
    const double inv_n = 1.0 / static_cast<double>(samples.size());
    for (const auto& s : samples) {
      if (s.advantage == 0.0) continue;
      const double ratio = std::exp(seq_logprob(current, s.tokens) - seq_logprob(old, s.tokens));
      const double plain = ratio * s.advantage;
      const double bounded = clip(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * s.advantage;
      if (bounded < plain) continue;
      accumulate_logprob_grad(current, s.tokens, inv_n * plain, grad);
    }
  }
  if (cfg.kl_beta != 0.0) {
    const auto kl_grad = kl_exact_grad(current, ref);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] -= cfg.kl_beta * kl_grad[k];
  }
  return grad;
}

SyntheticTask::SyntheticTask(std::vector<int> target, std::vector<double> weights, std::size_t vocab_size)
    : target_(std::move(target)), weights_(std::move(weights)), vocab_(vocab_size) {
  if (target_.empty() || weights_.size() != target_.size()) throw ShapeMismatch("task needs one weight per position");
  for (int tok : target_) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= vocab_) throw BadSequence("target token outside vocabulary");
  }
  for (double w : weights_) {
    if (!(w > 0.0)) throw ConfigError("task weights must be positive");
  }
  weight_sum_ = std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

SyntheticTask SyntheticTask::random(std::size_t vocab_size, std::size_t seq_len, std::uint64_t seed) {
  Rng rng = Rng(seed).substream("task");
  std::vector<int> target(seq_len);
  std::vector<double> weights(seq_len);
  for (std::size_t t = 0; t < seq_len; ++t) {
    target[t] = static_cast<int>(rng.below(vocab_size));
    weights[t] = 0.5 + rng.uniform();
  }
  return SyntheticTask(std::move(target), std::move(weights), vocab_size);
}

double SyntheticTask::true_reward(std::span<const int> y) const {
  if (y.size() != target_.size()) throw BadSequence("sequence length must equal the task length");
  double r = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (y[t] == target_[t]) r += weights_[t];
  }
  return r / weight_sum_;
}

double SyntheticTask::expected_true_reward(const SeqPolicy& p) const {
  if (p.seq_len() != target_.size() || p.vocab_size() != vocab_) throw ShapeMismatch("policy does not fit the task");
  double r = 0.0;
  for (std::size_t t = 0; t < target_.size(); ++t) r += weights_[t] * p.probs(t)[target_[t]];
  return r / weight_sum_;
}

std::string SyntheticTask::render(std::span<const int> y) const {
  std::string out;
  for (std::size_t t = 0; t < y.size(); ++t) {
    if (t > 0) out += ' ';
    out += 't';
    out += std::to_string(y[t]);
  }
  return out;
}

std::optional<PreferenceLabel> JudgeRlTask::decode(std::span<const int> y) const {
  if (y.empty()) return std::nullopt;
  const int tok = y.back();
  if (gold.is_binary()) {
    if (tok == 0) return PreferenceLabel::binary(BinaryChoice::A);
    if (tok == 1) return PreferenceLabel::binary(BinaryChoice::B);
    return std::nullopt;
  }
  if (tok >= 2 && tok < 8) return PreferenceLabel::multiclass(multiclass_scale()[tok - 2]);
  return std::nullopt;
}

double JudgeRlTask::reward(std::span<const int> y) const { return rule_reward(decode(y), gold); }

double JudgeRlTask::expected_reward(const SeqPolicy& p) const {
  const auto probs = p.probs(p.seq_len() - 1);
  double r = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    const int tok = static_cast<int>(k);
    r += probs[k] * reward(std::span<const int>(&tok, 1));
  }
  return r;
}

StepResult grpo_step(const SeqPolicy& policy, const SeqPolicy& ref, const StepEnv& env, const TrainConfig& cfg,
                     AdvMode mode, const Rng& rng) {
  validate(cfg);
  check_same_shape(policy, ref);
  if (mode == AdvMode::PointwiseRule && !env.reward) throw ConfigError("pointwise mode needs a reward function");
  if (mode == AdvMode::PairwiseMatrix && (env.judge == nullptr || !env.render)) {
    throw ConfigError("pairwise mode needs a judge and a renderer");
  }

  const std::size_t g = cfg.group_size;
  const std::size_t batch = cfg.rollout_batch;
  std::vector<Sample> samples(g * batch);
  std::vector<double> rewards(g * batch, 0.0);
  std::vector<double> true_rewards(g * batch, 0.0);
  std::vector<PreferenceMatrix> matrices(mode == AdvMode::PairwiseMatrix ? batch : 0);
  std::vector<std::size_t> errors(batch, 0);
  std::exception_ptr failure;

  const auto n_groups = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t bi = 0; bi < n_groups; ++bi) {
    try {
      const auto b = static_cast<std::size_t>(bi);
      const Rng group_rng = rng.substream("group").substream(b);
      Rng rollout = group_rng.substream("rollout");
      const std::size_t base = b * g;
      for (std::size_t i = 0; i < g; ++i) {
        samples[base + i].tokens = policy.sample(rollout, cfg.temperature);
        if (env.true_reward) true_rewards[base + i] = env.true_reward(samples[base + i].tokens);
      }

      std::vector<double> adv;
      if (mode == AdvMode::PointwiseRule) {
        const Rng noise = group_rng.substream("reward");
        for (std::size_t i = 0; i < g; ++i) {
          Rng draw = noise.substream(i);
          rewards[base + i] = env.reward(samples[base + i].tokens, draw);
        }
        adv = grpo_advantage(std::span<const double>(rewards).subspan(base, g), cfg.adv);
      } else {
        std::vector<GroupResponse> responses(g);
        for (std::size_t i = 0; i < g; ++i) {
          responses[i] = GroupResponse{env.render(samples[base + i].tokens), true_rewards[base + i]};
        }
        auto built = build_preference_matrix("g" + std::to_string(b), env.context, responses, *env.judge, env.matrix,
                                             group_rng.substream("judge"));
        errors[b] = built.failed_pairs.size();
        adv = pairwise_advantage(built.matrix, cfg.adv);
        matrices[b] = std::move(built.matrix);
      }
      for (std::size_t i = 0; i < g; ++i) samples[base + i].advantage = adv[i];
    } catch (...) {
#pragma omp critical(grpo_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  StepResult out;
  StepMetrics& m = out.metrics;
  const auto n = static_cast<double>(samples.size());
  if (env.expected_true_reward) {
    m.mean_true_reward = env.expected_true_reward(policy);
  } else {
    m.mean_true_reward = std::accumulate(true_rewards.begin(), true_rewards.end(), 0.0) / n;
  }
  m.mean_reward = mode == AdvMode::PointwiseRule ? std::accumulate(rewards.begin(), rewards.end(), 0.0) / n
                                                 : std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : samples) m.mean_abs_adv += std::abs(s.advantage) / n;
  m.kl = kl_exact(policy, ref);
  m.judge_errors = std::accumulate(errors.begin(), errors.end(), std::size_t{0});

  SeqPolicy current = policy;
  for (std::size_t epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
    if (epoch + 1 == cfg.inner_epochs) m.clip_frac = clipped_surrogate(current, policy, ref, samples, cfg).clip_frac;
    const auto grad = clipped_surrogate_grad(current, policy, ref, samples, cfg);
    auto logits = current.logits();
    for (std::size_t k = 0; k < grad.size(); ++k) logits[k] += cfg.lr * grad[k];
  }
  out.policy = std::move(current);
  out.matrices = std::move(matrices);
  return out;
}

RunResult train(const StepEnv& env, std::size_t vocab_size, std::size_t seq_len, const TrainConfig& cfg,
                AdvMode mode) {
  validate(cfg);
  const SeqPolicy ref(vocab_size, seq_len);
  SeqPolicy policy = ref;
  const Rng root = Rng(cfg.seed).substream("train");

  RunResult result;
  result.metrics.reserve(cfg.steps + 1);
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    auto step = grpo_step(policy, ref, env, cfg, mode, root.substream(static_cast<std::uint64_t>(s)));
    step.metrics.step = s;
    result.metrics.push_back(step.metrics);
    policy = std::move(step.policy);
    result.last_matrices = std::move(step.matrices);
  }

  StepMetrics last;
  last.step = cfg.steps;
  if (env.expected_true_reward) {
    last.mean_true_reward = env.expected_true_reward(policy);
  } else if (env.true_reward) {
    Rng eval = Rng(cfg.seed).substream("eval");
    const std::size_t n = cfg.group_size * cfg.rollout_batch;
    for (std::size_t i = 0; i < n; ++i) last.mean_true_reward += env.true_reward(policy.sample(eval)) / static_cast<double>(n);
  }
  last.mean_reward = std::numeric_limits<double>::quiet_NaN();
  last.kl = kl_exact(policy, ref);
  result.metrics.push_back(last);
  result.final_policy = std::move(policy);
  return result;
}

RunResult train_rlhf(const SyntheticTask& task, const Judge* judge, const TrainConfig& cfg, AdvMode mode,
                     const RlhfOptions& opts) {
  if (mode == AdvMode::PairwiseMatrix && judge == nullptr) throw ConfigError("pairwise RLHF needs a judge");
  StepEnv env;
  env.true_reward = [&task](std::span<const int> y) { return task.true_reward(y); };
  env.expected_true_reward = [&task](const SeqPolicy& p) { return task.expected_true_reward(p); };
  const double noise = opts.reward_noise;
  env.reward = [&task, noise](std::span<const int> y, Rng& rng) {
    const double r = task.true_reward(y);
    return noise > 0.0 ? r + noise * rng.normal() : r;
  };
  env.judge = judge;
  env.matrix = MatrixConfig{opts.kind, opts.roles, opts.calls};
  env.render = [&task](std::span<const int> y) { return task.render(y); };
  return train(env, task.vocab_size(), task.seq_len(), cfg, mode);
}

RunResult train_judge_rl(const JudgeRlTask& task, const TrainConfig& cfg) {
  StepEnv env;
  env.true_reward = [&task](std::span<const int> y) { return task.reward(y); };
  env.expected_true_reward = [&task](const SeqPolicy& p) { return task.expected_reward(p); };
  env.reward = [&task](std::span<const int> y, Rng&) { return task.reward(y); };
  return train(env, task.vocab_size, task.seq_len, cfg, AdvMode::PointwiseRule);
}

int Vocabulary::label_token(const PreferenceLabel& label) const {
  if (label.is_binary()) return label.binary_value() == BinaryChoice::A ? 0 : 1;
  const int v = label.multiclass_value();
  return v < 0 ? v + 5 : v + 4;
}

Sequence Vocabulary::encode(const WarmupExample& w) {
  Sequence out;
  std::istringstream words(w.chosen.reasoning);
  std::string word;
  while (words >> word) {
    auto [it, inserted] = words_.try_emplace(word, kFirstWordId + static_cast<int>(words_.size()));
    out.push_back(it->second);
  }
  out.push_back(label_token(w.chosen.predicted_label));
  return out;
}

SftResult sft_train(const std::vector<Sequence>& encoded, std::size_t vocab_size, std::size_t seq_len, double lr,
                    std::size_t epochs) {
  SftResult out{SeqPolicy(vocab_size, seq_len), {}};
  if (encoded.empty()) return out;
  const double inv_n = 1.0 / static_cast<double>(encoded.size());
  auto mean_loss = [&] {
    double total = 0.0;
    for (const auto& seq : encoded) total += sft_loss(out.policy, seq).total();
    return total * inv_n;
  };
  for (std::size_t e = 0; e < epochs; ++e) {
    out.loss.push_back(mean_loss());
    std::vector<double> grad(out.policy.num_params(), 0.0);
    for (const auto& seq : encoded) {
      const auto g = sft_loss_grad(out.policy, seq);
      for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += inv_n * g[k];
    }
    auto logits = out.policy.logits();
    for (std::size_t k = 0; k < grad.size(); ++k) logits[k] -= lr * grad[k];
  }
  out.loss.push_back(mean_loss());
  return out;
}

}  // namespace pairadv
