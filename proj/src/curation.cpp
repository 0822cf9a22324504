#include "pairadv/curation.hpp"

#include <exception>
#include <unordered_map>

#include "pairadv/errors.hpp"

namespace pairadv {

void validate(const CurationConfig& cfg) {
  if (cfg.min_trajectories < 1) throw ConfigError("curation.min_trajectories must be >= 1");
}

std::optional<WarmupExample> select_warmup_trajectory(const PreferenceExample& ex,
                                                      std::span<const TrajectoryRecord> trajs,
                                                      const CurationConfig& cfg) {
  const TrajectoryRecord* best = nullptr;
  for (const auto& t : trajs) {
    if (t.example_id != ex.id) throw IdMismatch(ex.id, t.example_id);
    if (!(t.predicted_label == ex.gold_label)) continue;
    if (best == nullptr) {
      best = &t;
      continue;
    }
    const bool better = cfg.strategy == CurationStrategy::LongestCorrect ? t.reasoning_len > best->reasoning_len
                                                                         : t.reasoning_len < best->reasoning_len;
    if (better) best = &t;
  }
  if (best == nullptr) return std::nullopt;
  return WarmupExample{ex, *best};
}

std::pair<std::vector<WarmupExample>, CurationReport> build_warmup_dataset(
    const std::vector<PreferenceExample>& examples, const std::vector<TrajectoryRecord>& trajectories,
    const CurationConfig& cfg) {
  validate(cfg);

  std::unordered_map<std::string, std::size_t> index;
  index.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) index.emplace(examples[i].id, i);

  std::vector<std::vector<TrajectoryRecord>> grouped(examples.size());
  for (const auto& t : trajectories) {
    const auto it = index.find(t.example_id);
    if (it == index.end()) throw IdMismatch("<none>", t.example_id);
    grouped[it->second].push_back(t);
  }

  const auto n = static_cast<std::ptrdiff_t>(examples.size());
  std::vector<std::optional<WarmupExample>> selected(examples.size());
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      selected[i] = select_warmup_trajectory(examples[i], grouped[i], cfg);
    } catch (...) {
#pragma omp critical(curation_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<WarmupExample> kept;
  CurationReport report;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (grouped[i].size() < cfg.min_trajectories) report.short_examples.push_back(examples[i].id);
    if (selected[i]) {
      kept.push_back(std::move(*selected[i]));
      ++report.kept;
    } else {
      ++report.discarded;
    }
  }
  return {std::move(kept), std::move(report)};
}

}  // namespace pairadv
