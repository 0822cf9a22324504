#include "pairadv/advantage.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>

#include "pairadv/errors.hpp"

namespace pairadv {

void validate(const AdvConfig& cfg) {
  if (!(cfg.eps >= 0.0)) throw ConfigError("adv.eps must be >= 0");
}

std::vector<double> grpo_advantage(std::span<const double> rewards, const AdvConfig& cfg) {
  const std::size_t g = rewards.size();
  if (g < 2) throw GroupTooSmall(g);
  std::vector<double> adv(g, 0.0);
  // Equal rewards carry no signal. Test directly: the rounded mean of equal
  // values need not equal them, which would leave a spurious tiny std.
  const auto [lo, hi] = std::minmax_element(rewards.begin(), rewards.end());
  if (*lo == *hi) return adv;

  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(g);
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  const double denom = std::sqrt(ss / static_cast<double>(g - 1)) + cfg.eps;
  if (denom == 0.0) return adv;
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / denom;
  return adv;
}

PreferenceMatrix::PreferenceMatrix(std::size_t g, std::string group_id)
    : g_(g), entries_(g * g, 0.0), group_id_(std::move(group_id)) {}

PreferenceMatrix::PreferenceMatrix(std::size_t g, std::vector<double> entries, std::string group_id)
    : g_(g), entries_(std::move(entries)), group_id_(std::move(group_id)) {
  if (entries_.size() != g_ * g_) throw ShapeMismatch("matrix needs G*G entries");
}

PreferenceMatrix PreferenceMatrix::from_rewards(std::span<const double> rewards, std::string group_id) {
  PreferenceMatrix d(rewards.size(), std::move(group_id));
  for (std::size_t i = 0; i < d.g_; ++i) {
    for (std::size_t j = 0; j < d.g_; ++j) d.entries_[i * d.g_ + j] = rewards[i] - rewards[j];
  }
  return d;
}

void PreferenceMatrix::set_pair(std::size_t i, std::size_t j, double value) {
  entries_[i * g_ + j] = value;
  entries_[j * g_ + i] = -value;
}

PreferenceMatrix PreferenceMatrix::scaled(double c) const {
  PreferenceMatrix out = *this;
  for (double& x : out.entries_) x *= c;
  return out;
}

PreferenceMatrix PreferenceMatrix::transposed() const {
  PreferenceMatrix out = *this;
  for (std::size_t i = 0; i < g_; ++i) {
    for (std::size_t j = 0; j < g_; ++j) out.entries_[i * g_ + j] = entries_[j * g_ + i];
  }
  return out;
}

void PreferenceMatrix::check(double tol) const {
  for (std::size_t i = 0; i < g_; ++i) {
    if (std::abs((*this)(i, i)) > tol) throw BrokenSkewSymmetry(i, i);
    for (std::size_t j = i + 1; j < g_; ++j) {
      if (!(std::abs((*this)(i, j) + (*this)(j, i)) <= tol)) throw BrokenSkewSymmetry(i, j);
    }
  }
}

std::vector<double> pairwise_advantage(const PreferenceMatrix& d, const AdvConfig& cfg) {
  const std::size_t g = d.size();
  if (g < 2) throw GroupTooSmall(g);
  d.check();

  const auto gd = static_cast<double>(g);
  std::vector<double> row_sums(g, 0.0);
  double ss = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      const double x = d(i, j);
      row_sums[i] += x;
      ss += x * x;
    }
  }
  const double denom = std::sqrt(gd / (2.0 * (gd - 1.0)) * ss) + gd * cfg.eps;

  std::vector<double> adv(g, 0.0);
  if (denom == 0.0) return adv;
  for (std::size_t i = 0; i < g; ++i) adv[i] = row_sums[i] / denom;
  return adv;
}

EquivalenceResult equivalence_oracle(std::span<const double> rewards, const AdvConfig& cfg) {
  EquivalenceResult out;
  out.pointwise = grpo_advantage(rewards, cfg);
  out.pairwise = pairwise_advantage(PreferenceMatrix::from_rewards(rewards), cfg);
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out.max_abs_diff = std::max(out.max_abs_diff, std::abs(out.pointwise[i] - out.pairwise[i]));
  }
  return out;
}

double preference_strength(const Judgment& judgment) {
  const auto& s = judgment.label;
  if (!s.is_binary()) return -static_cast<double>(s.multiclass_value());
  const double len = static_cast<double>(std::max<std::size_t>(judgment.reasoning_len, 1));
  return -static_cast<double>(label_sign(s)) / len;
}

MatrixBuild build_preference_matrix(const std::string& group_id, const std::string& context,
                                    std::span<const GroupResponse> group, const Judge& judge,
                                    const MatrixConfig& cfg, const Rng& rng) {
  const std::size_t g = group.size();
  if (g < 2) throw GroupTooSmall(g);

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(g * (g - 1) / 2);
  for (std::size_t i = 0; i < g; ++i) {
    for (std::size_t j = i + 1; j < g; ++j) pairs.emplace_back(i, j);
  }

  const Rng role_rng = rng.substream("roles");
  std::vector<double> values(pairs.size(), 0.0);
  std::vector<char> failed(pairs.size(), 0);
  const int threads = call_threads(judge, cfg.calls);
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  std::exception_ptr unexpected;

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto [i, j] = pairs[k];
    bool swap = cfg.roles == RoleAssignment::HigherIndexFirst;
    if (cfg.roles == RoleAssignment::SeededRandom) {
      Rng coin = role_rng.substream(i, j);
      swap = coin.below(2) == 1;
    }
    const std::size_t a = swap ? j : i;
    const std::size_t b = swap ? i : j;

    PreferenceExample ex;
    ex.id = group_id + ":" + std::to_string(a) + ":" + std::to_string(b);
    ex.context = context;
    ex.response_a = group[a].text;
    ex.response_b = group[b].text;
    const double diff = group[b].true_reward - group[a].true_reward;
    const int direction = diff > 0.0 ? 1 : -1;
    ex.gold_label = cfg.kind == LabelKind::Binary
                        ? PreferenceLabel::binary(direction < 0 ? BinaryChoice::A : BinaryChoice::B)
                        : PreferenceLabel::multiclass(direction);

    try {
      const Judgment jd = judge_with_retries(judge, cfg.kind, ex, std::abs(diff), cfg.calls, rng.substream(i, j));
      const double d_ab = preference_strength(jd);
      values[k] = swap ? -d_ab : d_ab;
    } catch (const JudgeError&) {
      failed[k] = 1;
    } catch (...) {
#pragma omp critical(matrix_failure)
      if (!unexpected) unexpected = std::current_exception();
    }
  }
  if (unexpected) std::rethrow_exception(unexpected);

  MatrixBuild out{PreferenceMatrix(g, group_id), {}};
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (failed[k]) {
      out.failed_pairs.push_back(pairs[k]);
      continue;
    }
    out.matrix.set_pair(pairs[k].first, pairs[k].second, values[k]);
  }
  out.matrix.check();
  return out;
}

}  // namespace pairadv
