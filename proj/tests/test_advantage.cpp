#include "pairadv/advantage.hpp"

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "pairadv/errors.hpp"

namespace pairadv {
namespace {

constexpr AdvConfig kNoEps{0.0};

void expect_near(const std::vector<double>& got, const std::vector<double>& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "i=" << i;
}

std::vector<double> random_rewards(Rng& rng, std::size_t g) {
  std::vector<double> r(g);
  for (double& x : r) x = rng.normal();
  return r;
}

TEST(GrpoAdvantage, HandFixtures) {
  expect_near(grpo_advantage(std::vector<double>{1, 0}, kNoEps), {0.70710678118654752, -0.70710678118654752}, 1e-9);
  expect_near(grpo_advantage(std::vector<double>{1, 0.5, 0}, kNoEps), {1, 0, -1}, 1e-9);
}

TEST(GrpoAdvantage, ConstantGroupsGiveZero) {
  for (double eps : {0.0, 1e-6}) {
    for (double c : {0.0, 0.1, 1.0 / 3.0, -7.25}) {
      for (double a : grpo_advantage(std::vector<double>(5, c), AdvConfig{eps})) EXPECT_EQ(a, 0.0);
    }
  }
  EXPECT_THROW(grpo_advantage(std::vector<double>{1.0}, kNoEps), GroupTooSmall);
}

TEST(PairwiseAdvantage, HandFixtures) {
  const std::vector<double> two{1, 0}, three{1, 0.5, 0};
  expect_near(pairwise_advantage(PreferenceMatrix::from_rewards(two), kNoEps),
              {0.70710678118654752, -0.70710678118654752}, 1e-9);
  expect_near(pairwise_advantage(PreferenceMatrix::from_rewards(three), kNoEps), {1, 0, -1}, 1e-9);
}

TEST(PairwiseAdvantage, MatchesPointwiseOnRewardDifferences) {
  Rng rng(21);
  for (std::size_t g : {2, 3, 4, 8, 16}) {
    for (int k = 0; k < 200; ++k) {
      const auto r = random_rewards(rng, g);
      for (double eps : {0.0, 1e-6}) EXPECT_LE(equivalence_oracle(r, AdvConfig{eps}).max_abs_diff, 1e-9);
    }
  }
}

TEST(PairwiseAdvantage, RejectsBrokenMatrices) {
  PreferenceMatrix d(3);
  d.set_pair(0, 1, 0.4);
  EXPECT_NO_THROW(pairwise_advantage(d, kNoEps));
  std::vector<double> e(d.entries());
  e[1 * 3 + 0] = 0.3;
  EXPECT_THROW(pairwise_advantage(PreferenceMatrix(3, e), kNoEps), BrokenSkewSymmetry);
  std::vector<double> diag(9, 0.0);
  diag[4] = 1.0;
  EXPECT_THROW(pairwise_advantage(PreferenceMatrix(3, diag), kNoEps), BrokenSkewSymmetry);
  EXPECT_THROW(PreferenceMatrix(3, std::vector<double>(8)), ShapeMismatch);
  EXPECT_THROW(pairwise_advantage(PreferenceMatrix(1), kNoEps), GroupTooSmall);
}

TEST(PairwiseAdvantage, ZeroMatrixGivesZero) {
  for (double a : pairwise_advantage(PreferenceMatrix(4), kNoEps)) EXPECT_EQ(a, 0.0);
}

TEST(PairwiseAdvantage, InvariantsOnRandomSkewMatrices) {
  Rng rng(5);
  for (int k = 0; k < 2000; ++k) {
    const std::size_t g = 2 + rng.below(15);
    PreferenceMatrix d(g);
    for (std::size_t i = 0; i < g; ++i) {
      for (std::size_t j = i + 1; j < g; ++j) d.set_pair(i, j, rng.bernoulli(0.2) ? 0.0 : rng.normal());
    }
    const auto adv = pairwise_advantage(d, kNoEps);
    EXPECT_NEAR(std::accumulate(adv.begin(), adv.end(), 0.0), 0.0, 1e-9);
    const double c = 0.01 + 10 * rng.uniform();
    expect_near(pairwise_advantage(d.scaled(c), kNoEps), adv, 1e-9);
    // Transposing reverses every preference.
    const auto flipped = pairwise_advantage(d.transposed(), kNoEps);
    for (std::size_t i = 0; i < g; ++i) EXPECT_NEAR(flipped[i], -adv[i], 1e-12);
    // Ordering follows the row sums (net wins).
    for (std::size_t i = 0; i + 1 < g; ++i) {
      double ri = 0, rj = 0;
      for (std::size_t j = 0; j < g; ++j) {
        ri += d(i, j);
        rj += d(i + 1, j);
      }
      if (std::abs(ri - rj) > 1e-9) EXPECT_EQ(ri > rj, adv[i] > adv[i + 1]);
    }
  }
}

TEST(PreferenceStrength, MulticlassAndLengthWeightedBinary) {
  Judgment j;
  j.label = PreferenceLabel::multiclass(-2);
  EXPECT_EQ(preference_strength(j), 2.0);
  j.label = PreferenceLabel::multiclass(3);
  j.reasoning_len = 77;
  EXPECT_EQ(preference_strength(j), -3.0);
  j.label = PreferenceLabel::binary(BinaryChoice::B);
  j.reasoning_len = 400;
  EXPECT_DOUBLE_EQ(preference_strength(j), -0.0025);
  j.label = PreferenceLabel::binary(BinaryChoice::A);
  j.reasoning_len = 0;
  EXPECT_EQ(preference_strength(j), 1.0);
}

std::vector<GroupResponse> group_of(const std::vector<double>& rewards) {
  std::vector<GroupResponse> g;
  for (std::size_t i = 0; i < rewards.size(); ++i) g.push_back({"response " + std::to_string(i), rewards[i]});
  return g;
}

SimJudgeConfig perfect() {
  SimJudgeConfig cfg;
  cfg.p_max = 1.0;
  cfg.kappa = 1e9;
  return cfg;
}

TEST(BuildMatrix, PerfectMulticlassJudgeRecoversOrdering) {
  const auto group = group_of({0.9, 0.1, 0.5, 0.45});
  const SimulatedJudge judge(perfect());
  const auto built = build_preference_matrix("g", "ctx", group, judge, {LabelKind::Multiclass}, Rng(1));
  EXPECT_TRUE(built.failed_pairs.empty());
  const auto& d = built.matrix;
  EXPECT_EQ(d.group_id(), "g");
  EXPECT_EQ(d(0, 1), 3.0);  // gap 0.8
  EXPECT_EQ(d(2, 0), -2.0);  // gap 0.4
  EXPECT_EQ(d(2, 3), 1.0);  // gap 0.05
  const auto adv = pairwise_advantage(d, kNoEps);
  EXPECT_GT(adv[0], adv[2]);
  EXPECT_GT(adv[2], adv[3]);
  EXPECT_GT(adv[3], adv[1]);
}

TEST(BuildMatrix, RoleAssignmentDoesNotChangePerfectJudgeMatrix) {
  const auto group = group_of({0.2, 0.7, 0.3, 0.9, 0.0});
  const SimulatedJudge judge(perfect());
  for (auto kind : {LabelKind::Binary, LabelKind::Multiclass}) {
    const auto lower = build_preference_matrix("g", "c", group, judge, {kind, RoleAssignment::LowerIndexFirst}, Rng(3));
    const auto higher = build_preference_matrix("g", "c", group, judge, {kind, RoleAssignment::HigherIndexFirst}, Rng(3));
    const auto random = build_preference_matrix("g", "c", group, judge, {kind, RoleAssignment::SeededRandom}, Rng(3));
    EXPECT_EQ(lower.matrix, higher.matrix);
    EXPECT_EQ(lower.matrix, random.matrix);
  }
}

TEST(BuildMatrix, BinaryEntriesScaleWithReasoningLength) {
  const auto group = group_of({1.0, 0.0});
  auto cfg = perfect();
  const SimulatedJudge judge(cfg);
  const auto d = build_preference_matrix("g", "c", group, judge, {LabelKind::Binary}, Rng(0)).matrix;
  EXPECT_DOUBLE_EQ(d(0, 1), 1.0 / static_cast<double>(sim_reasoning_len(1.0, cfg)));
}

// Fails every call on pairs touching response 0.
class PickyJudge final : public Judge {
 public:
  Judgment judge(LabelKind, const PreferenceExample& ex, double, Rng&) const override {
    if (ex.response_a == "response 0" || ex.response_b == "response 0") {
      throw JudgeError(JudgeError::Reason::Transport, "down");
    }
    Judgment j;
    j.label = PreferenceLabel::binary(BinaryChoice::A);
    j.reasoning_len = 10;
    return j;
  }
};

class ExplodingJudge final : public Judge {
 public:
  Judgment judge(LabelKind, const PreferenceExample&, double, Rng&) const override {
    throw std::logic_error("bug");
  }
};

TEST(BuildMatrix, FailedPairsStayZero) {
  const auto group = group_of({0.1, 0.2, 0.3});
  const auto built = build_preference_matrix("g", "c", group, PickyJudge(), {}, Rng(0));
  ASSERT_EQ(built.failed_pairs.size(), 2u);
  EXPECT_EQ(built.failed_pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
  EXPECT_EQ(built.matrix(0, 1), 0.0);
  EXPECT_EQ(built.matrix(0, 2), 0.0);
  EXPECT_EQ(built.matrix(1, 2), 0.1);
  EXPECT_THROW(build_preference_matrix("g", "c", group, ExplodingJudge(), {}, Rng(0)), std::logic_error);
  EXPECT_THROW(build_preference_matrix("g", "c", group_of({1}), PickyJudge(), {}, Rng(0)), GroupTooSmall);
}

TEST(BuildMatrix, DeterministicForSeed) {
  const auto group = group_of({0.3, 0.31, 0.5, 0.52, 0.1, 0.12});
  const SimulatedJudge judge({});
  const MatrixConfig cfg{LabelKind::Multiclass, RoleAssignment::SeededRandom};
  EXPECT_EQ(build_preference_matrix("g", "c", group, judge, cfg, Rng(8)).matrix,
            build_preference_matrix("g", "c", group, judge, cfg, Rng(8)).matrix);
}

}  // namespace
}  // namespace pairadv
