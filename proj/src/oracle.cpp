#include "pairadv/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "pairadv/kernels.hpp"
#include "pairadv/trainer.hpp"

namespace pairadv {
namespace {

SeqPolicy random_policy(std::size_t v, std::size_t l, double scale, Rng& rng) {
  std::vector<double> logits(v * l);
  for (double& x : logits) x = scale * rng.normal();
  return SeqPolicy(v, l, std::move(logits));
}

SeqPolicy with_logits(const SeqPolicy& like, std::span<const double> x) {
  return SeqPolicy(like.vocab_size(), like.seq_len(), std::vector<double>(x.begin(), x.end()));
}

}  // namespace

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    probe[k] = x[k] + h;
    const double up = f(probe);
    probe[k] = x[k] - h;
    const double down = f(probe);
    probe[k] = x[k];
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

double GradientOracleReport::max() const { return std::max({sft_max_rel_err, kl_max_rel_err, grpo_max_rel_err}); }

GradientOracleReport gradient_oracle(std::size_t instances, const Rng& rng) {
  GradientOracleReport report;
  report.instances = instances;
  for (std::size_t k = 0; k < instances; ++k) {
    Rng r = rng.substream(static_cast<std::uint64_t>(k));
    const std::size_t v = 2 + r.below(4);
    const std::size_t l = 1 + r.below(3);
    const SeqPolicy current = random_policy(v, l, 1.0, r);
    const SeqPolicy ref = random_policy(v, l, 1.0, r);
    std::vector<double> old_logits(current.logits().begin(), current.logits().end());
    for (double& x : old_logits) x += 0.3 * r.normal();
    const SeqPolicy old(v, l, std::move(old_logits));

    // SFT on a random prefix.
    Sequence encoded(1 + r.below(l));
    for (int& tok : encoded) tok = static_cast<int>(r.below(v));
    const auto sft_fd = central_difference(
        [&](std::span<const double> x) { return sft_loss(with_logits(current, x), encoded).total(); }, current.logits());
    report.sft_max_rel_err = std::max(report.sft_max_rel_err, relative_error(sft_loss_grad(current, encoded), sft_fd));

    const auto kl_fd = central_difference(
        [&](std::span<const double> x) { return kl_exact(with_logits(current, x), ref); }, current.logits());
    report.kl_max_rel_err = std::max(report.kl_max_rel_err, relative_error(kl_exact_grad(current, ref), kl_fd));

    TrainConfig cfg;
    cfg.clip_eps = 0.2;
    cfg.kl_beta = 0.1 * r.uniform();
    std::vector<Sample> samples(4);
    for (auto& s : samples) {
      s.tokens = old.sample(r);
      s.advantage = r.normal();
    }
    const auto grpo_fd = central_difference(
        [&](std::span<const double> x) {
          return clipped_surrogate(with_logits(current, x), old, ref, samples, cfg).objective;
        },
        current.logits());
    report.grpo_max_rel_err = std::max(report.grpo_max_rel_err,
                                       relative_error(clipped_surrogate_grad(current, old, ref, samples, cfg), grpo_fd));
  }
  return report;
}

double binomial_vote_accuracy(double p, std::size_t m) {
  // log C(m,k) via lgamma keeps large m finite.
  auto term = [&](std::size_t k) {
    const double log_c = std::lgamma(static_cast<double>(m) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                         std::lgamma(static_cast<double>(m - k) + 1.0);
    return std::exp(log_c) * std::pow(p, static_cast<double>(k)) * std::pow(1.0 - p, static_cast<double>(m - k));
  };
  double acc = 0.0;
  for (std::size_t k = m / 2 + 1; k <= m; ++k) acc += term(k);
  if (m % 2 == 0) acc += 0.5 * term(m / 2);
  return acc;
}

EquivalenceReport equivalence_sweep(std::size_t groups, std::size_t g, const Rng& rng) {
  Rng r = rng.substream("rewards");
  std::vector<double> rewards(groups * g);
  for (std::size_t k = 0; k < groups; ++k) {
    // Every 50th group is constant to cover the degenerate branch.
    const bool constant = k % 50 == 49;
    const double c = r.uniform();
    for (std::size_t i = 0; i < g; ++i) rewards[k * g + i] = constant ? c : r.uniform();
  }
  EquivalenceReport report;
  report.groups = groups;
  for (double eps : {0.0, 1e-6}) {
    report.max_abs_diff = std::max(report.max_abs_diff, batch_equivalence_max_diff(rewards, g, AdvConfig{eps}));
  }
  return report;
}

}  // namespace pairadv
