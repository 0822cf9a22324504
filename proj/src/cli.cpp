#include "pairadv/cli.hpp"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "pairadv/config.hpp"
#include "pairadv/curation.hpp"
#include "pairadv/errors.hpp"
#include "pairadv/io.hpp"
#include "pairadv/judge.hpp"
#include "pairadv/oracle.hpp"
#include "pairadv/rewards.hpp"
#include "pairadv/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pairadv {
namespace {

// Flag values as parsed; unset flags leave the config untouched.
struct Overrides {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool lenient = false;

  std::optional<std::size_t> synth_examples;
  std::optional<double> synth_p;
  std::optional<std::string> kind;
  std::optional<std::size_t> m_traj;

  std::optional<std::string> examples;
  std::optional<std::string> trajectories;
  std::optional<std::string> strategy;

  std::optional<std::string> dataset;
  std::optional<std::size_t> vote;
  std::optional<std::string> backend;
  std::optional<double> p_max;
  std::optional<double> gap;

  std::optional<std::string> groups_file;
  std::optional<std::string> roles;

  std::optional<std::string> adv;
  std::optional<std::size_t> steps;
  std::optional<double> lr;
  std::optional<std::size_t> group_size;
  std::optional<std::size_t> batch;
  std::optional<double> noise;

  std::optional<std::size_t> oracle_groups;
  std::optional<std::size_t> oracle_g;
  std::optional<double> eps;

  std::vector<std::string> metrics;
};

template <typename T, typename U>
void apply(const std::optional<T>& flag, U& field) {
  if (flag) field = static_cast<U>(*flag);
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config ? load_run_config(*o.config) : RunConfig{};
  // Round-trip through JSON so enum names in flags share one parser.
  json j = to_json(c);
  if (o.kind) j["judge"]["kind"] = *o.kind;
  if (o.strategy) j["curation"]["strategy"] = *o.strategy;
  if (o.backend) j["judge"]["backend"] = *o.backend;
  if (o.roles) j["judge"]["roles"] = *o.roles;
  if (o.adv) j["train"]["mode"] = *o.adv;
  c = run_config_from_json(j);
  c.judge.remote.token = {};

  apply(o.seed, c.seed);
  apply(o.out, c.io.out);
  if (o.lenient) c.strict = false;
  apply(o.synth_examples, c.synth.examples);
  apply(o.synth_p, c.synth.trajectory_accuracy);
  apply(o.m_traj, c.curation.min_trajectories);
  apply(o.examples, c.io.examples);
  apply(o.trajectories, c.io.trajectories);
  apply(o.dataset, c.io.dataset);
  apply(o.vote, c.vote.m);
  apply(o.p_max, c.judge.sim.p_max);
  apply(o.gap, c.judge.eval_gap);
  apply(o.groups_file, c.io.groups);
  apply(o.steps, c.train.steps);
  apply(o.lr, c.train.lr);
  apply(o.group_size, c.train.group_size);
  apply(o.batch, c.train.rollout_batch);
  apply(o.noise, c.reward_noise);
  apply(o.oracle_groups, c.oracle.groups);
  apply(o.oracle_g, c.oracle.group_size);
  apply(o.eps, c.adv.eps);
  if (!o.metrics.empty()) c.io.metrics = o.metrics;

  c.train.adv = c.adv;
  c.train.seed = c.seed;
  if (c.judge.backend == JudgeBackend::Remote) apply_judge_env(c.judge.remote);
  validate(c);
  return c;
}

std::ofstream create(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("IoError", "cannot write " + path.string());
  return f;
}

void write_resolved(const RunConfig& cfg) {
  auto f = create(fs::path(cfg.io.out) / "config.resolved.json");
  f << to_json(cfg).dump(2) << '\n';
}

std::string require_path(const std::string& value, const char* flag) {
  if (value.empty()) throw ConfigError(std::string("missing input: pass ") + flag);
  return value;
}

LoadOptions load_options(const RunConfig& cfg) { return LoadOptions{cfg.strict, cfg.judge.tokens}; }

void print_warnings(const LoadWarnings& w, std::ostream& err) {
  for (const auto& m : w.messages) err << "warning: " << m << '\n';
}

std::unique_ptr<Judge> make_judge(const RunConfig& cfg) {
  if (cfg.judge.backend == JudgeBackend::Remote) {
    auto remote = cfg.judge.remote;
    apply_judge_env(remote);
    remote.tokens = cfg.judge.tokens;
    return std::make_unique<RemoteJudge>(remote);
  }
  return std::make_unique<SimulatedJudge>(cfg.judge.sim);
}

// ---- synth ----

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
  const Rng root = Rng(cfg.seed).substream("synth");
  const auto kind = cfg.judge.kind;
  std::vector<PreferenceExample> examples;
  std::vector<TrajectoryRecord> trajectories;
  for (std::size_t i = 0; i < cfg.synth.examples; ++i) {
    Rng r = root.substream(static_cast<std::uint64_t>(i));
    PreferenceExample ex;
    char id[32];
    std::snprintf(id, sizeof(id), "ex-%05zu", i);
    ex.id = id;
    ex.context = "User: synthetic question " + std::to_string(i);
    ex.response_a = "candidate answer a" + std::to_string(r.below(1000));
    ex.response_b = "candidate answer b" + std::to_string(r.below(1000));
    ex.gold_label = kind == LabelKind::Binary
                        ? PreferenceLabel::binary(r.below(2) == 0 ? BinaryChoice::A : BinaryChoice::B)
                        : PreferenceLabel::multiclass(multiclass_scale()[r.below(6)]);
    for (std::size_t k = 0; k < cfg.curation.min_trajectories; ++k) {
      TrajectoryRecord t;
      t.example_id = ex.id;
      if (r.bernoulli(cfg.synth.trajectory_accuracy)) {
        t.predicted_label = ex.gold_label;
      } else if (kind == LabelKind::Binary) {
        t.predicted_label = flipped(ex.gold_label);
      } else {
        // One of the five wrong values, uniformly.
        std::vector<int> wrong;
        for (int v : multiclass_scale()) {
          if (v != ex.gold_label.multiclass_value()) wrong.push_back(v);
        }
        t.predicted_label = PreferenceLabel::multiclass(wrong[r.below(wrong.size())]);
      }
      t.reasoning_len = 16 + r.below(241);
      std::string reasoning;
      for (std::size_t w = 0; w < t.reasoning_len; ++w) {
        if (w > 0) reasoning += ' ';
        reasoning += "w" + std::to_string(w % 97);
      }
      t.reasoning = std::move(reasoning);
      trajectories.push_back(std::move(t));
    }
    examples.push_back(std::move(ex));
  }
  const fs::path dir(cfg.io.out);
  save_dataset(dir / "dataset.jsonl", examples);
  save_trajectories(dir / "trajectories.jsonl", trajectories);
  out << "examples=" << examples.size() << " trajectories=" << trajectories.size() << '\n';
  return 0;
}

// ---- curate ----

int cmd_curate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  LoadWarnings warnings;
  const auto examples = load_dataset(require_path(cfg.io.examples, "--examples"), load_options(cfg), &warnings);
  const auto trajs = load_trajectories(require_path(cfg.io.trajectories, "--trajectories"), load_options(cfg), &warnings);
  print_warnings(warnings, err);

  const auto [warmup, report] = build_warmup_dataset(examples, trajs, cfg.curation);
  const fs::path dir(cfg.io.out);
  save_warmup(dir / "warmup.jsonl", warmup);
  auto f = create(dir / "curation_report.json");
  f << json{{"kept", report.kept},
            {"discarded", report.discarded},
            {"discard_rate", report.discard_rate()},
            {"short_examples", report.short_examples}}
           .dump(2)
    << '\n';
  for (const auto& id : report.short_examples) {
    err << "warning: example '" << id << "' has fewer than " << cfg.curation.min_trajectories << " trajectories\n";
  }
  out << "kept=" << report.kept << " discarded=" << report.discarded << " rate=" << format_double(report.discard_rate())
      << '\n';
  return 0;
}

// ---- judge ----

int cmd_judge(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  LoadWarnings warnings;
  const auto examples = load_dataset(require_path(cfg.io.dataset, "--dataset"), load_options(cfg), &warnings);
  print_warnings(warnings, err);
  const auto judge = make_judge(cfg);
  const Rng root = Rng(cfg.seed).substream("judge");

  struct Row {
    std::optional<PreferenceLabel> label;
    std::size_t parse_errors = 0;
    bool failed = false;
  };
  std::vector<Row> rows(examples.size());
  const auto n = static_cast<std::ptrdiff_t>(examples.size());
  const int threads = call_threads(*judge, cfg.judge.calls);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& ex = examples[i];
    try {
      auto vote = sample_and_vote(*judge, ex.gold_label.kind(), ex, cfg.judge.eval_gap, cfg.vote,
                                  root.substream(static_cast<std::uint64_t>(i)));
      rows[i].label = vote.label;
      rows[i].parse_errors = vote.parse_errors;
    } catch (const JudgeError&) {
      rows[i].failed = true;
    }
  }

  std::size_t exact = 0, sign = 0, parse_errors = 0, failed = 0;
  std::vector<json> lines;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& row = rows[i];
    const auto& gold = examples[i].gold_label;
    const bool hit = row.label && *row.label == gold;
    exact += hit ? 1 : 0;
    sign += row.label && label_sign(*row.label) == label_sign(gold) ? 1 : 0;
    parse_errors += row.parse_errors;
    failed += row.failed ? 1 : 0;
    lines.push_back(json{{"id", examples[i].id},
                         {"predicted", row.label ? label_to_json(*row.label) : json(nullptr)},
                         {"correct", hit},
                         {"reward", rule_reward(row.label, gold)},
                         {"parse_errors", row.parse_errors},
                         {"failed", row.failed}});
  }
  auto f = create(fs::path(cfg.io.out) / "judgments.jsonl");
  write_jsonl(f, lines);

  const double total = examples.empty() ? 1.0 : static_cast<double>(examples.size());
  out << "n=" << examples.size() << " m=" << cfg.vote.m << " accuracy=" << format_double(exact / total)
      << " sign_accuracy=" << format_double(sign / total) << " parse_errors=" << parse_errors << " failed=" << failed;
  if (cfg.judge.backend == JudgeBackend::Simulated) {
    const double p = sim_correct_probability(cfg.judge.eval_gap, cfg.judge.sim);
    out << " predicted_binary_accuracy=" << format_double(binomial_vote_accuracy(p, cfg.vote.m));
  }
  out << '\n';
  return 0;
}

// ---- matrix ----

int cmd_matrix(const RunConfig& cfg, std::ostream& out) {
  const auto path = require_path(cfg.io.groups, "--groups");
  std::ifstream in(path);
  if (!in) throw Error("IoError", "cannot read " + path);
  const auto judge = make_judge(cfg);
  const MatrixConfig mcfg{cfg.judge.kind, cfg.judge.roles, cfg.judge.calls};
  const Rng root = Rng(cfg.seed).substream("matrix");

  std::vector<json> matrices, advantages;
  std::string line;
  std::size_t lineno = 0, index = 0, failed_pairs = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw SchemaError(lineno, "not a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key != "group_id" && key != "context" && key != "responses" && key != "rewards") {
        if (cfg.strict) throw SchemaError(lineno, "unknown field '" + key + "'");
      }
    }
    std::vector<GroupResponse> group;
    std::string group_id, context;
    try {
      group_id = j.at("group_id").get<std::string>();
      context = j.at("context").get<std::string>();
      const auto texts = j.at("responses").get<std::vector<std::string>>();
      std::vector<double> rewards(texts.size(), 0.0);
      if (j.contains("rewards")) {
        rewards = j["rewards"].get<std::vector<double>>();
        if (rewards.size() != texts.size()) throw SchemaError(lineno, "rewards and responses differ in length");
      } else if (cfg.judge.backend == JudgeBackend::Simulated) {
        throw SchemaError(lineno, "the simulated judge needs 'rewards'");
      }
      for (std::size_t i = 0; i < texts.size(); ++i) group.push_back(GroupResponse{texts[i], rewards[i]});
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    }

    auto built = build_preference_matrix(group_id, context, group, *judge, mcfg, root.substream(index++));
    failed_pairs += built.failed_pairs.size();
    const auto adv = pairwise_advantage(built.matrix, cfg.adv);
    matrices.push_back(to_json(built.matrix));
    json failed = json::array();
    for (const auto& [a, b] : built.failed_pairs) failed.push_back({a, b});
    advantages.push_back(json{{"group_id", group_id}, {"advantages", adv}, {"failed_pairs", failed}});
  }

  const fs::path dir(cfg.io.out);
  auto fm = create(dir / "matrices.jsonl");
  write_jsonl(fm, matrices);
  auto fa = create(dir / "advantages.jsonl");
  write_jsonl(fa, advantages);
  out << "groups=" << matrices.size() << " failed_pairs=" << failed_pairs << '\n';
  return 0;
}

// ---- train ----

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const auto task = SyntheticTask::random(cfg.task.vocab_size, cfg.task.seq_len, cfg.task.seed);
  std::unique_ptr<Judge> judge;
  if (cfg.mode == AdvMode::PairwiseMatrix) judge = make_judge(cfg);
  RlhfOptions opts{cfg.judge.kind, cfg.judge.roles, cfg.judge.calls, cfg.reward_noise};
  const auto result = train_rlhf(task, judge.get(), cfg.train, cfg.mode, opts);

  const fs::path dir(cfg.io.out);
  auto fm = create(dir / "metrics.csv");
  write_metrics_csv(fm, result.metrics);
  auto fp = create(dir / "final_policy.json");
  fp << to_json(result.final_policy).dump() << '\n';
  if (!result.last_matrices.empty()) {
    std::vector<json> rows;
    for (const auto& d : result.last_matrices) rows.push_back(to_json(d));
    auto fx = create(dir / "matrices.jsonl");
    write_jsonl(fx, rows);
  }
  std::size_t judge_errors = 0;
  for (const auto& m : result.metrics) judge_errors += m.judge_errors;
  out << "steps=" << cfg.train.steps << " initial_true_reward=" << format_double(result.initial_true_reward())
      << " final_true_reward=" << format_double(result.final_true_reward()) << " judge_errors=" << judge_errors << '\n';
  return 0;
}

// ---- oracle ----

int cmd_oracle(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Rng root = Rng(cfg.seed).substream("oracle");
  const auto eq = equivalence_sweep(cfg.oracle.groups, cfg.oracle.group_size, root.substream("equivalence"));
  const auto grad = gradient_oracle(cfg.oracle.gradient_instances, root.substream("gradient"));
  out << "max_abs_diff=" << format_double(eq.max_abs_diff) << " groups=" << eq.groups << " G=" << cfg.oracle.group_size
      << '\n';
  out << "grad_max_rel_err=" << format_double(grad.max()) << " sft=" << format_double(grad.sft_max_rel_err)
      << " kl=" << format_double(grad.kl_max_rel_err) << " grpo=" << format_double(grad.grpo_max_rel_err)
      << " instances=" << grad.instances << '\n';
  if (eq.max_abs_diff > 1e-9 || grad.max() > 1e-4) {
    err << "error: OracleFailure: tolerance exceeded\n";
    return 1;
  }
  return 0;
}

// ---- report ----

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  if (cfg.io.metrics.empty()) throw ConfigError("missing input: pass one or more metrics CSV files");
  std::ostringstream csv;
  csv << "run,steps,initial_true_reward,final_true_reward,improvement,mean_clip_frac,final_kl,judge_errors\n";
  for (const auto& path : cfg.io.metrics) {
    std::ifstream in(path);
    if (!in) throw Error("IoError", "cannot read " + path);
    const auto rows = read_metrics_csv(in);
    if (rows.empty()) throw SchemaError(2, path + " has no rows");
    double clip = 0.0;
    std::size_t errors = 0, training_rows = 0;
    for (const auto& m : rows) {
      errors += m.judge_errors;
      if (std::isnan(m.mean_reward) && &m == &rows.back()) continue;
      clip += m.clip_frac;
      ++training_rows;
    }
    const double initial = rows.front().mean_true_reward;
    const double final = rows.back().mean_true_reward;
    csv << path << ',' << rows.back().step << ',' << format_double(initial) << ',' << format_double(final) << ','
        << format_double(final - initial) << ','
        << format_double(training_rows == 0 ? 0.0 : clip / static_cast<double>(training_rows)) << ','
        << format_double(rows.back().kl) << ',' << errors << '\n';
  }
  auto f = create(fs::path(cfg.io.out) / "summary.csv");
  f << csv.str();
  out << csv.str();
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Pairwise-preference policy optimization experiments", "pairadv"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "JSON run configuration (e.g. a config.resolved.json)");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--out", o.out, "Output directory");
  app.add_flag("--lenient", o.lenient, "Warn on unknown JSONL fields instead of failing");

  auto* synth = app.add_subcommand("synth", "Write a synthetic preference dataset and trajectory corpus");
  synth->add_option("--examples", o.synth_examples, "Number of preference examples");
  synth->add_option("--p", o.synth_p, "Probability that each trajectory is correct");
  synth->add_option("--m", o.m_traj, "Trajectories per example");
  synth->add_option("--kind", o.kind, "binary|multiclass");

  auto* curate = app.add_subcommand("curate", "Build the warm-up dataset from trajectory JSONL");
  curate->add_option("--examples", o.examples, "Preference JSONL");
  curate->add_option("--trajectories", o.trajectories, "Trajectory JSONL");
  curate->add_option("--strategy", o.strategy, "longest|shortest");
  curate->add_option("--m", o.m_traj, "Expected trajectories per example");

  auto* judge = app.add_subcommand("judge", "Evaluate a judge on a preference dataset");
  judge->add_option("--dataset", o.dataset, "Preference JSONL");
  judge->add_option("--vote", o.vote, "Judgments per example, aggregated by majority vote");
  judge->add_option("--backend", o.backend, "sim|remote");
  judge->add_option("--p-max", o.p_max, "Simulated judge asymptotic accuracy");
  judge->add_option("--gap", o.gap, "True reward gap assumed by the simulated judge");

  auto* matrix = app.add_subcommand("matrix", "Build preference matrices for a response-group file");
  matrix->add_option("--groups", o.groups_file, "JSONL of {group_id, context, responses, rewards}");
  matrix->add_option("--kind", o.kind, "binary|multiclass");
  matrix->add_option("--backend", o.backend, "sim|remote");
  matrix->add_option("--roles", o.roles, "lower_first|higher_first|random");
  matrix->add_option("--p-max", o.p_max, "Simulated judge asymptotic accuracy");

  auto* train = app.add_subcommand("train", "Run pointwise or pairwise RLHF on the synthetic task");
  train->add_option("--adv", o.adv, "pointwise|pairwise")->check(CLI::IsMember({"pointwise", "pairwise"}));
  train->add_option("--steps", o.steps, "Training steps");
  train->add_option("--lr", o.lr, "Learning rate");
  train->add_option("--group-size", o.group_size, "Responses per prompt (G)");
  train->add_option("--batch", o.batch, "Groups per step");
  train->add_option("--kind", o.kind, "binary|multiclass");
  train->add_option("--backend", o.backend, "sim|remote");
  train->add_option("--p-max", o.p_max, "Simulated judge asymptotic accuracy");
  train->add_option("--noise", o.noise, "Std of noise on pointwise rewards");

  auto* oracle = app.add_subcommand("oracle", "Run the advantage-equivalence and gradient oracles");
  oracle->add_option("--groups", o.oracle_groups, "Random reward groups");
  oracle->add_option("--g", o.oracle_g, "Group size");
  oracle->add_option("--eps", o.eps, "Shared epsilon (both 0 and this value are checked)");

  auto* report = app.add_subcommand("report", "Summarize metrics CSV files");
  report->add_option("metrics", o.metrics, "metrics.csv files")->required();

  for (auto* sub : {synth, curate, judge, matrix, train, oracle, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const RunConfig cfg = resolve(o);
    fs::create_directories(cfg.io.out);
    write_resolved(cfg);
    if (synth->parsed()) return cmd_synth(cfg, out);
    if (curate->parsed()) return cmd_curate(cfg, out, err);
    if (judge->parsed()) return cmd_judge(cfg, out, err);
    if (matrix->parsed()) return cmd_matrix(cfg, out);
    if (train->parsed()) return cmd_train(cfg, out);
    if (oracle->parsed()) return cmd_oracle(cfg, out, err);
    if (report->parsed()) return cmd_report(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.category() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: Internal: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"pairadv"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace pairadv
