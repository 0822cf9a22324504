#pragma once

// JSONL datasets, matrix audit records and CSV metrics.
//
//   preference: {"context","gold_label":{"kind","value"},"id","response_a","response_b"}
//   trajectory: {"example_id","predicted_label":{"kind","value"},"reasoning"[,"reasoning_len"]}
//   warm-up:    {"example_id","label":{"kind","value"},"reasoning"}
//
// label values are "A"/"B" or a decimal integer string. Objects are written
// with keys in sorted order, one per line.

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairadv/advantage.hpp"
#include "pairadv/curation.hpp"
#include "pairadv/model.hpp"
#include "pairadv/trainer.hpp"

namespace pairadv {

struct LoadOptions {
  // Reject unknown fields; otherwise record a warning and continue.
  bool strict = true;
  TokenConvention tokens = TokenConvention::Whitespace;
};

struct LoadWarnings {
  std::vector<std::string> messages;
};

nlohmann::json label_to_json(const PreferenceLabel& label);
PreferenceLabel label_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PreferenceExample& ex);
nlohmann::json to_json(const TrajectoryRecord& t);
nlohmann::json to_json(const WarmupExample& w);
nlohmann::json to_json(const PreferenceMatrix& d);
nlohmann::json to_json(const SeqPolicy& p);

// Each throws SchemaError carrying the 1-based line number. Blank lines are
// skipped. A context given as [{"role","content"}, ...] is flattened.
std::vector<PreferenceExample> read_preferences(std::istream& in, const LoadOptions& opts = {},
                                                LoadWarnings* warnings = nullptr);
std::vector<TrajectoryRecord> read_trajectories(std::istream& in, const LoadOptions& opts = {},
                                                LoadWarnings* warnings = nullptr);
std::vector<PreferenceMatrix> read_matrices(std::istream& in);

std::vector<PreferenceExample> load_dataset(const std::filesystem::path& path, const LoadOptions& opts = {},
                                            LoadWarnings* warnings = nullptr);
std::vector<TrajectoryRecord> load_trajectories(const std::filesystem::path& path, const LoadOptions& opts = {},
                                                LoadWarnings* warnings = nullptr);

void write_jsonl(std::ostream& out, std::span<const nlohmann::json> rows);

void save_dataset(const std::filesystem::path& path, std::span<const PreferenceExample> examples);
void save_trajectories(const std::filesystem::path& path, std::span<const TrajectoryRecord> records);
void save_warmup(const std::filesystem::path& path, std::span<const WarmupExample> warmup);

inline constexpr const char* kMetricsHeader = "step,mean_true_reward,mean_reward,clip_frac,kl,judge_errors";

void write_metrics_csv(std::ostream& out, std::span<const StepMetrics> metrics);
std::vector<StepMetrics> read_metrics_csv(std::istream& in);

// Shortest decimal form that reads back to the same double; "nan" for NaN.
std::string format_double(double x);

}  // namespace pairadv
