#pragma once

// Group-relative advantages two ways: from pointwise rewards (mean/std
// normalization within a group) and directly from a skew-symmetric matrix of
// pairwise preference strengths. When d_ij = r_i - r_j and both share eps the
// two are the same function:
//
//   r_i - mean(r) = (1/G) sum_j d_ij
//   std(r)        = sqrt(sum_ij d_ij^2 / (2G(G-1)))
//
// so G * (std + eps) = sqrt(G/(2(G-1)) * sum_ij d_ij^2) + G*eps.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pairadv/judge.hpp"
#include "pairadv/model.hpp"
#include "pairadv/rng.hpp"

namespace pairadv {

struct AdvConfig {
  double eps = 1e-6;
};

void validate(const AdvConfig& cfg);

// A_i = (r_i - mean) / (std + eps), std Bessel-corrected. Returns zeros when
// the denominator is exactly 0. Throws GroupTooSmall for G < 2.
std::vector<double> grpo_advantage(std::span<const double> rewards, const AdvConfig& cfg);

// G x G skew-symmetric matrix with zero diagonal, stored row-major.
class PreferenceMatrix {
 public:
  PreferenceMatrix() = default;
  explicit PreferenceMatrix(std::size_t g, std::string group_id = {});
  // Takes entries as given; call check() to verify the invariants.
  PreferenceMatrix(std::size_t g, std::vector<double> entries, std::string group_id = {});

  // d_ij = r_i - r_j.
  static PreferenceMatrix from_rewards(std::span<const double> rewards, std::string group_id = {});

  std::size_t size() const noexcept { return g_; }
  const std::string& group_id() const noexcept { return group_id_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * g_ + j]; }
  const std::vector<double>& entries() const noexcept { return entries_; }

  // Sets d_ij = value and d_ji = -value. Precondition: i != j.
  void set_pair(std::size_t i, std::size_t j, double value);

  PreferenceMatrix scaled(double c) const;
  PreferenceMatrix transposed() const;

  // Throws BrokenSkewSymmetry when |d_ij + d_ji| > tol or |d_ii| > tol.
  void check(double tol = 1e-12) const;

  friend bool operator==(const PreferenceMatrix&, const PreferenceMatrix&) = default;

 private:
  std::size_t g_ = 0;
  std::vector<double> entries_;
  std::string group_id_;
};

// A_i = sum_j d_ij / (sqrt(G/(2(G-1)) * sum_ij d_ij^2) + G*eps). Returns
// zeros when the denominator is exactly 0. Throws GroupTooSmall or
// BrokenSkewSymmetry.
std::vector<double> pairwise_advantage(const PreferenceMatrix& d, const AdvConfig& cfg);

struct EquivalenceResult {
  std::vector<double> pointwise;
  std::vector<double> pairwise;
  double max_abs_diff = 0.0;
};

// Runs both estimators on the same rewards (d_ij := r_i - r_j) with the same
// eps and reports how far apart they land.
EquivalenceResult equivalence_oracle(std::span<const double> rewards, const AdvConfig& cfg);

// Matrix entry implied by one judgment with response i in the A role and j in
// the B role. Multiclass: d_ij = -s. Binary: d_ij = -sign(s) / |R|, with the
// reasoning length floored at 1 token.
double preference_strength(const Judgment& judgment);

enum class RoleAssignment {
  LowerIndexFirst,   // y_i as A, y_j as B for i < j
  HigherIndexFirst,  // y_j as A, y_i as B
  SeededRandom,
};

struct GroupResponse {
  std::string text;
  // Ground-truth reward, visible only to simulated judges.
  double true_reward = 0.0;
};

struct MatrixConfig {
  LabelKind kind = LabelKind::Binary;
  RoleAssignment roles = RoleAssignment::LowerIndexFirst;
  CallPolicy calls;
};

struct MatrixBuild {
  PreferenceMatrix matrix;
  // Pairs whose judge calls all failed; their entries are 0.
  std::vector<std::pair<std::size_t, std::size_t>> failed_pairs;
};

// One judge call per unordered pair {i, j} of responses to a single prompt,
// issued with up to calls.max_inflight in flight. Pair (i, j) draws from
// rng.substream(i, j), so results do not depend on scheduling.
MatrixBuild build_preference_matrix(const std::string& group_id, const std::string& context,
                                    std::span<const GroupResponse> group, const Judge& judge,
                                    const MatrixConfig& cfg, const Rng& rng);

}  // namespace pairadv
