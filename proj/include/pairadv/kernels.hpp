#pragma once

// Batched kernels over many independent groups. Each has an OpenMP version
// in pairadv:: and a single-threaded reference in pairadv::serial:: that the
// tests compare against; both produce bit-identical results.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pairadv/advantage.hpp"
#include "pairadv/rng.hpp"

namespace pairadv {

// `rewards` holds consecutive groups of size g. Returns advantages in the
// same layout.
std::vector<double> batch_grpo_advantage(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg);
std::vector<double> batch_pairwise_advantage(std::span<const PreferenceMatrix> matrices, const AdvConfig& cfg);

// Max |pointwise - pairwise| over every group in `rewards`.
double batch_equivalence_max_diff(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg);

// Fraction of `trials` in which majority voting over m simulated binary
// judgments, each correct with probability p, lands on the gold label.
// Trial t uses rng.substream(t).
double simulate_vote_accuracy(double p, std::size_t m, std::size_t trials, const Rng& rng);

namespace serial {

std::vector<double> batch_grpo_advantage(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg);
std::vector<double> batch_pairwise_advantage(std::span<const PreferenceMatrix> matrices, const AdvConfig& cfg);
double batch_equivalence_max_diff(std::span<const double> rewards, std::size_t g, const AdvConfig& cfg);
double simulate_vote_accuracy(double p, std::size_t m, std::size_t trials, const Rng& rng);

}  // namespace serial

}  // namespace pairadv
