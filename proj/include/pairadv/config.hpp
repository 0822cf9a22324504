#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pairadv/advantage.hpp"
#include "pairadv/curation.hpp"
#include "pairadv/judge.hpp"
#include "pairadv/trainer.hpp"

namespace pairadv {

enum class JudgeBackend { Simulated, Remote };

struct JudgeSettings {
  JudgeBackend backend = JudgeBackend::Simulated;
  LabelKind kind = LabelKind::Binary;
  RoleAssignment roles = RoleAssignment::LowerIndexFirst;
  TokenConvention tokens = TokenConvention::Whitespace;
  // True reward gap assumed when a simulated judge scores a dataset; large
  // values make its accuracy p_max.
  double eval_gap = 1e9;
  SimJudgeConfig sim;
  RemoteJudgeConfig remote;
  CallPolicy calls;
};

struct TaskSettings {
  std::size_t vocab_size = 8;
  std::size_t seq_len = 4;
  std::uint64_t seed = 0;
};

struct SynthSettings {
  std::size_t examples = 100;
  double trajectory_accuracy = 0.5;  // chance each generated trajectory is correct
};

struct OracleSettings {
  std::size_t groups = 1000;
  std::size_t group_size = 8;
  std::size_t gradient_instances = 100;
};

struct IoSettings {
  std::string examples;
  std::string trajectories;
  std::string dataset;
  std::string groups;
  std::vector<std::string> metrics;
  std::string out = "out";
};

// Every effective parameter of a CLI run. Serialized as
// config.resolved.json; loading that file reproduces the run.
struct RunConfig {
  std::uint64_t seed = 0;
  bool strict = true;
  CurationConfig curation;
  JudgeSettings judge;
  VoteConfig vote;
  AdvConfig adv;
  TrainConfig train = default_rlhf_train();
  AdvMode mode = AdvMode::PairwiseMatrix;
  double reward_noise = 0.0;
  TaskSettings task;
  SynthSettings synth;
  OracleSettings oracle;
  IoSettings io;

  // Rollout settings for RLHF: group size 4, KL coefficient 1e-4.
  static TrainConfig default_rlhf_train();
};

void validate(const RunConfig& cfg);

// The remote auth token is never serialized.
nlohmann::json to_json(const RunConfig& cfg);
// Missing keys keep their defaults; unknown keys throw ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace pairadv
