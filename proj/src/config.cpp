#include "pairadv/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "pairadv/errors.hpp"

namespace pairadv {
namespace {

using nlohmann::json;

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<CurationStrategy> kStrategies[] = {{CurationStrategy::LongestCorrect, "longest"},
                                                      {CurationStrategy::ShortestCorrect, "shortest"}};
constexpr EnumName<JudgeBackend> kBackends[] = {{JudgeBackend::Simulated, "sim"}, {JudgeBackend::Remote, "remote"}};
constexpr EnumName<LabelKind> kKinds[] = {{LabelKind::Binary, "binary"}, {LabelKind::Multiclass, "multiclass"}};
constexpr EnumName<RoleAssignment> kRoles[] = {{RoleAssignment::LowerIndexFirst, "lower_first"},
                                               {RoleAssignment::HigherIndexFirst, "higher_first"},
                                               {RoleAssignment::SeededRandom, "random"}};
constexpr EnumName<TokenConvention> kTokens[] = {{TokenConvention::Whitespace, "whitespace"},
                                                 {TokenConvention::Characters, "characters"}};
constexpr EnumName<AdvMode> kModes[] = {{AdvMode::PointwiseRule, "pointwise"}, {AdvMode::PairwiseMatrix, "pairwise"}};

template <typename E, std::size_t N>
std::string name_of(const EnumName<E> (&table)[N], E value) {
  for (const auto& e : table) {
    if (e.value == value) return e.name;
  }
  return "?";
}

template <typename E, std::size_t N>
E value_of(const EnumName<E> (&table)[N], const std::string& name, const char* field) {
  for (const auto& e : table) {
    if (name == e.name) return e.value;
  }
  throw ConfigError(std::string("unknown value '") + name + "' for " + field);
}

// Reads known keys of one config object, rejecting the rest.
class Section {
 public:
  Section(const json& j, std::string path, std::initializer_list<const char*> keys) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : j_.items()) {
      if (known.count(key) == 0) throw ConfigError("unknown config key " + path_ + "." + key);
    }
  }

  template <typename T>
  void get(const char* key, T& out) const {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("bad type for " + path_ + "." + key);
    }
  }

  template <typename E, std::size_t N>
  void get_enum(const char* key, const EnumName<E> (&table)[N], E& out) const {
    std::string name;
    get(key, name);
    if (!name.empty()) out = value_of(table, name, key);
  }

  const json* child(const char* key) const {
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

 private:
  const json& j_;
  std::string path_;
};

}  // namespace

TrainConfig RunConfig::default_rlhf_train() {
  TrainConfig t;
  t.group_size = 4;
  t.kl_beta = 1e-4;
  t.clip_eps = 0.2;
  t.lr = 0.5;
  t.steps = 500;
  t.rollout_batch = 4;
  t.temperature = 1.0;
  return t;
}

void validate(const RunConfig& cfg) {
  validate(cfg.curation);
  validate(cfg.vote);
  validate(cfg.adv);
  validate(cfg.train);
  if (cfg.judge.backend == JudgeBackend::Simulated) validate(cfg.judge.sim);
  if (cfg.task.vocab_size < 2 || cfg.task.seq_len < 1) throw ConfigError("task needs vocab_size >= 2 and seq_len >= 1");
  if (!(cfg.synth.trajectory_accuracy >= 0.0 && cfg.synth.trajectory_accuracy <= 1.0)) {
    throw ConfigError("synth.trajectory_accuracy must be in [0, 1]");
  }
  if (cfg.oracle.group_size < 2) throw ConfigError("oracle.group_size must be >= 2");
  if (!(cfg.reward_noise >= 0.0)) throw ConfigError("reward_noise must be >= 0");
}

json to_json(const RunConfig& c) {
  const auto& s = c.judge.sim;
  const auto& r = c.judge.remote;
  const auto& t = c.train;
  return json{
      {"seed", c.seed},
      {"strict", c.strict},
      {"curation", {{"strategy", name_of(kStrategies, c.curation.strategy)}, {"min_trajectories", c.curation.min_trajectories}}},
      {"judge",
       {{"backend", name_of(kBackends, c.judge.backend)},
        {"kind", name_of(kKinds, c.judge.kind)},
        {"roles", name_of(kRoles, c.judge.roles)},
        {"tokens", name_of(kTokens, c.judge.tokens)},
        {"eval_gap", c.judge.eval_gap},
        {"sim",
         {{"p_max", s.p_max},
          {"kappa", s.kappa},
          {"len_min", s.len_min},
          {"len_max", s.len_max},
          {"lambda", s.lambda},
          {"mag2_gap", s.mag2_gap},
          {"mag3_gap", s.mag3_gap},
          {"seed", s.seed}}},
        {"remote",
         {{"url", r.url},
          {"model", r.model},
          {"temperature", r.temperature},
          {"top_p", r.top_p},
          {"max_tokens", r.max_tokens},
          {"timeout_seconds", r.timeout_seconds}}},
        {"calls", {{"max_retries", c.judge.calls.max_retries}, {"max_inflight", c.judge.calls.max_inflight}}}}},
      {"vote", {{"m", c.vote.m}, {"tie_break", "seeded_random"}}},
      {"adv", {{"eps", c.adv.eps}}},
      {"train",
       {{"group_size", t.group_size},
        {"clip_eps", t.clip_eps},
        {"kl_beta", t.kl_beta},
        {"lr", t.lr},
        {"steps", t.steps},
        {"rollout_batch", t.rollout_batch},
        {"inner_epochs", t.inner_epochs},
        {"temperature", t.temperature},
        {"mode", name_of(kModes, c.mode)},
        {"reward_noise", c.reward_noise}}},
      {"task", {{"vocab_size", c.task.vocab_size}, {"seq_len", c.task.seq_len}, {"seed", c.task.seed}}},
      {"synth", {{"examples", c.synth.examples}, {"trajectory_accuracy", c.synth.trajectory_accuracy}}},
      {"oracle",
       {{"groups", c.oracle.groups},
        {"group_size", c.oracle.group_size},
        {"gradient_instances", c.oracle.gradient_instances}}},
      {"io",
       {{"examples", c.io.examples},
        {"trajectories", c.io.trajectories},
        {"dataset", c.io.dataset},
        {"groups", c.io.groups},
        {"metrics", c.io.metrics},
        {"out", c.io.out}}},
  };
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  const Section top(j, "config",
                    {"seed", "strict", "curation", "judge", "vote", "adv", "train", "task", "synth", "oracle", "io"});
  top.get("seed", c.seed);
  top.get("strict", c.strict);

  if (const auto* cj = top.child("curation")) {
    const Section s(*cj, "curation", {"strategy", "min_trajectories"});
    s.get_enum("strategy", kStrategies, c.curation.strategy);
    s.get("min_trajectories", c.curation.min_trajectories);
  }
  if (const auto* jj = top.child("judge")) {
    const Section s(*jj, "judge", {"backend", "kind", "roles", "tokens", "eval_gap", "sim", "remote", "calls"});
    s.get_enum("backend", kBackends, c.judge.backend);
    s.get_enum("kind", kKinds, c.judge.kind);
    s.get_enum("roles", kRoles, c.judge.roles);
    s.get_enum("tokens", kTokens, c.judge.tokens);
    s.get("eval_gap", c.judge.eval_gap);
    if (const auto* sj = s.child("sim")) {
      const Section x(*sj, "judge.sim", {"p_max", "kappa", "len_min", "len_max", "lambda", "mag2_gap", "mag3_gap", "seed"});
      auto& sim = c.judge.sim;
      x.get("p_max", sim.p_max);
      x.get("kappa", sim.kappa);
      x.get("len_min", sim.len_min);
      x.get("len_max", sim.len_max);
      x.get("lambda", sim.lambda);
      x.get("mag2_gap", sim.mag2_gap);
      x.get("mag3_gap", sim.mag3_gap);
      x.get("seed", sim.seed);
    }
    if (const auto* rj = s.child("remote")) {
      const Section x(*rj, "judge.remote", {"url", "model", "temperature", "top_p", "max_tokens", "timeout_seconds"});
      auto& rem = c.judge.remote;
      x.get("url", rem.url);
      x.get("model", rem.model);
      x.get("temperature", rem.temperature);
      x.get("top_p", rem.top_p);
      x.get("max_tokens", rem.max_tokens);
      x.get("timeout_seconds", rem.timeout_seconds);
    }
    if (const auto* kj = s.child("calls")) {
      const Section x(*kj, "judge.calls", {"max_retries", "max_inflight"});
      x.get("max_retries", c.judge.calls.max_retries);
      x.get("max_inflight", c.judge.calls.max_inflight);
    }
  }
  if (const auto* vj = top.child("vote")) {
    const Section s(*vj, "vote", {"m", "tie_break"});
    s.get("m", c.vote.m);
    std::string tie;
    s.get("tie_break", tie);
    if (!tie.empty() && tie != "seeded_random") throw ConfigError("unknown value '" + tie + "' for tie_break");
  }
  if (const auto* aj = top.child("adv")) {
    const Section s(*aj, "adv", {"eps"});
    s.get("eps", c.adv.eps);
  }
  if (const auto* tj = top.child("train")) {
    const Section s(*tj, "train",
                    {"group_size", "clip_eps", "kl_beta", "lr", "steps", "rollout_batch", "inner_epochs", "temperature",
                     "mode", "reward_noise"});
    auto& t = c.train;
    s.get("group_size", t.group_size);
    s.get("clip_eps", t.clip_eps);
    s.get("kl_beta", t.kl_beta);
    s.get("lr", t.lr);
    s.get("steps", t.steps);
    s.get("rollout_batch", t.rollout_batch);
    s.get("inner_epochs", t.inner_epochs);
    s.get("temperature", t.temperature);
    s.get_enum("mode", kModes, c.mode);
    s.get("reward_noise", c.reward_noise);
  }
  if (const auto* kj = top.child("task")) {
    const Section s(*kj, "task", {"vocab_size", "seq_len", "seed"});
    s.get("vocab_size", c.task.vocab_size);
    s.get("seq_len", c.task.seq_len);
    s.get("seed", c.task.seed);
  }
  if (const auto* sj = top.child("synth")) {
    const Section s(*sj, "synth", {"examples", "trajectory_accuracy"});
    s.get("examples", c.synth.examples);
    s.get("trajectory_accuracy", c.synth.trajectory_accuracy);
  }
  if (const auto* oj = top.child("oracle")) {
    const Section s(*oj, "oracle", {"groups", "group_size", "gradient_instances"});
    s.get("groups", c.oracle.groups);
    s.get("group_size", c.oracle.group_size);
    s.get("gradient_instances", c.oracle.gradient_instances);
  }
  if (const auto* ij = top.child("io")) {
    const Section s(*ij, "io", {"examples", "trajectories", "dataset", "groups", "metrics", "out"});
    s.get("examples", c.io.examples);
    s.get("trajectories", c.io.trajectories);
    s.get("dataset", c.io.dataset);
    s.get("groups", c.io.groups);
    s.get("metrics", c.io.metrics);
    s.get("out", c.io.out);
  }
  c.train.adv = c.adv;
  c.train.seed = c.seed;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  const auto j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return run_config_from_json(j);
}

}  // namespace pairadv
