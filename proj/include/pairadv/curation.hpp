#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pairadv/model.hpp"

namespace pairadv {

enum class CurationStrategy { LongestCorrect, ShortestCorrect };

struct CurationConfig {
  CurationStrategy strategy = CurationStrategy::LongestCorrect;
  // Expected number of trajectories per example (M).
  std::size_t min_trajectories = 10;
};

void validate(const CurationConfig& cfg);

struct WarmupExample {
  PreferenceExample example;
  TrajectoryRecord chosen;
};

struct CurationReport {
  std::size_t kept = 0;
  std::size_t discarded = 0;
  // Examples that arrived with fewer than min_trajectories records.
  std::vector<std::string> short_examples;

  double discard_rate() const {
    const auto n = kept + discarded;
    return n == 0 ? 0.0 : static_cast<double>(discarded) / static_cast<double>(n);
  }
};

// Keeps the trajectories whose prediction matches the gold label and picks
// the longest (or shortest) by reasoning_len; the first one wins on ties.
// Returns nullopt when no trajectory is correct. Throws IdMismatch if a
// record belongs to another example.
std::optional<WarmupExample> select_warmup_trajectory(const PreferenceExample& ex,
                                                      std::span<const TrajectoryRecord> trajs,
                                                      const CurationConfig& cfg);

// Applies select_warmup_trajectory to every example (in parallel) and keeps
// the input order. Throws IdMismatch for records whose example_id matches no
// example.
std::pair<std::vector<WarmupExample>, CurationReport> build_warmup_dataset(
    const std::vector<PreferenceExample>& examples, const std::vector<TrajectoryRecord>& trajectories,
    const CurationConfig& cfg);

}  // namespace pairadv
