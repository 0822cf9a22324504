#pragma once

// Independent numerical checks used by the `oracle` command and the tests:
// central finite differences against the analytic trainer gradients, and the
// batched pointwise/pairwise advantage equivalence.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pairadv/advantage.hpp"
#include "pairadv/rng.hpp"

namespace pairadv {

std::vector<double> central_difference(const std::function<double(std::span<const double>)>& f,
                                       std::span<const double> x, double h = 1e-5);

// ||a - b|| / max(||a||, ||b||, floor).
double relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-8);

struct GradientOracleReport {
  double sft_max_rel_err = 0.0;
  double kl_max_rel_err = 0.0;
  double grpo_max_rel_err = 0.0;
  std::size_t instances = 0;

  double max() const;
};

// Random instances with V in [2,5], L in [1,3] and G = 4 samples; instance k
// draws from rng.substream(k).
GradientOracleReport gradient_oracle(std::size_t instances, const Rng& rng);

struct EquivalenceReport {
  double max_abs_diff = 0.0;
  std::size_t groups = 0;
};

// `groups` random reward vectors of size g (uniform on [0,1) with some
// constant groups mixed in), checked at eps = 0 and eps = 1e-6.
EquivalenceReport equivalence_sweep(std::size_t groups, std::size_t g, const Rng& rng);

// Probability that a majority vote over m independent binary judgments, each
// correct with probability p, is correct, with exact ties scored as 1/2:
//   sum_{k > m/2} C(m,k) p^k (1-p)^(m-k) + [m even] 1/2 C(m,m/2) (p(1-p))^(m/2).
double binomial_vote_accuracy(double p, std::size_t m);

}  // namespace pairadv
