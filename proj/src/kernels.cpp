#include "pairadv/kernels.hpp"

#include <algorithm>
#include <cmath>

#include "pairadv/errors.hpp"
#include "pairadv/judge.hpp"

namespace pairadv {
namespace {

std::size_t group_count(std::span<const double> rewards, std::size_t g) {
  if (g < 2) throw GroupTooSmall(g);
  if (rewards.size() % g != 0) throw ShapeMismatch("reward count is not a multiple of the group size");
  return rewards.size() / g;
}

void grpo_group(std::span<const double> rewards, std::size_t g, std::size_t k, const AdvConfig& cfg,
                std::vector<double>& out) {
  const auto adv = grpo_advantage(rewards.subspan(k * g, g), cfg);
  std::copy(adv.begin(), adv.end(), out.begin() + static_cast<std::ptrdiff_t>(k * g));
}

std::size_t matrix_offset(std::span<const PreferenceMatrix> matrices, std::size_t k) {
  std::size_t off = 0;
  for (std::size_t i = 0; i < k; ++i) off += matrices[i].size();
  return off;
}

double equivalence_group(std::span<const double> rewards, std::size_t g, std::size_t k, const AdvConfig& cfg) {
  return equivalence_oracle(rewards.subspan(k * g, g), cfg).max_abs_diff;
}

bool vote_trial(double p, std::size_t m, const Rng& trial_rng) {
  Rng draws = trial_rng.substream("votes");
  const auto gold = PreferenceLabel::binary(BinaryChoice::B);
  std::vector<Judgment> ballot(m);
  for (auto& j : ballot) j.label = draws.bernoulli(p) ? gold : flipped(gold);
  Rng tie = trial_rng.substream("tie");
  return majority_vote(ballot, VoteConfig{m, TieBreak::SeededRandom}, tie) == gold;
}

}  // namespace

std::vector<double> batch_grpo_advantage(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg) {
  const auto groups = static_cast<std::ptrdiff_t>(group_count(rewards, g));
  std::vector<double> out(rewards.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < groups; ++k) grpo_group(rewards, g, static_cast<std::size_t>(k), cfg, out);
  return out;
}

std::vector<double> batch_pairwise_advantage(std::span<const PreferenceMatrix> matrices, const AdvConfig& cfg) {
  std::vector<std::size_t> offsets(matrices.size() + 1, 0);
  for (std::size_t k = 0; k < matrices.size(); ++k) offsets[k + 1] = offsets[k] + matrices[k].size();
  std::vector<double> out(offsets.back());
  const auto n = static_cast<std::ptrdiff_t>(matrices.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto adv = pairwise_advantage(matrices[k], cfg);
    std::copy(adv.begin(), adv.end(), out.begin() + static_cast<std::ptrdiff_t>(offsets[k]));
  }
  return out;
}

double batch_equivalence_max_diff(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg) {
  const auto groups = static_cast<std::ptrdiff_t>(group_count(rewards, g));
  double worst = 0.0;
#pragma omp parallel for schedule(static) reduction(max : worst)
  for (std::ptrdiff_t k = 0; k < groups; ++k) {
    worst = std::max(worst, equivalence_group(rewards, g, static_cast<std::size_t>(k), cfg));
  }
  return worst;
}

double simulate_vote_accuracy(double p, std::size_t m, std::size_t trials, const Rng& rng) {
  const auto n = static_cast<std::ptrdiff_t>(trials);
  std::int64_t hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    if (vote_trial(p, m, rng.substream(static_cast<std::uint64_t>(t)))) ++hits;
  }
  return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
}

namespace serial {

std::vector<double> batch_grpo_advantage(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg) {
  const std::size_t groups = group_count(rewards, g);
  std::vector<double> out(rewards.size());
  for (std::size_t k = 0; k < groups; ++k) grpo_group(rewards, g, k, cfg, out);
  return out;
}

std::vector<double> batch_pairwise_advantage(std::span<const PreferenceMatrix> matrices, const AdvConfig& cfg) {
  std::vector<double> out;
  out.reserve(matrix_offset(matrices, matrices.size()));
  for (const auto& d : matrices) {
    const auto adv = pairwise_advantage(d, cfg);
    out.insert(out.end(), adv.begin(), adv.end());
  }
  return out;
}

double batch_equivalence_max_diff(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg) {
  const std::size_t groups = group_count(rewards, g);
  double worst = 0.0;
  for (std::size_t k = 0; k < groups; ++k) worst = std::max(worst, equivalence_group(rewards, g, k, cfg));
  return worst;
}

double simulate_vote_accuracy(double p, std::size_t m, std::size_t trials, const Rng& rng) {
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    if (vote_trial(p, m, rng.substream(static_cast<std::uint64_t>(t)))) ++hits;
  }
  return trials == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace serial

}  // namespace pairadv
