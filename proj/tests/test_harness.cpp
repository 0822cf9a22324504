#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "pairadv/cli.hpp"
#include "pairadv/config.hpp"
#include "pairadv/errors.hpp"
#include "pairadv/io.hpp"
#include "pairadv/oracle.hpp"

namespace fs = std::filesystem;

namespace pairadv {
namespace {

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const auto dir = fs::temp_directory_path() / "pairadv_tests" / (std::string(info->name()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

// Value of `key=` in a space-separated summary line.
double field(const std::string& line, const std::string& key) {
  const auto pos = line.find(key + "=");
  EXPECT_NE(pos, std::string::npos) << key << " in " << line;
  return std::stod(line.substr(pos + key.size() + 1));
}

const char* kLine =
    R"({"context":"User: hi","gold_label":{"kind":"multiclass","value":"-2"},"id":"a1","response_a":"x","response_b":"y"})";

TEST(Jsonl, RoundTripIsByteIdentical) {
  const auto dir = scratch("rt");
  const std::string text = std::string(kLine) + "\n" +
                           R"({"context":"c","gold_label":{"kind":"binary","value":"B"},"id":"a2","response_a":"p","response_b":"q"})" +
                           "\n";
  write(dir / "in.jsonl", text);
  const auto data = load_dataset(dir / "in.jsonl");
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(data[0].gold_label, PreferenceLabel::multiclass(-2));
  save_dataset(dir / "out.jsonl", data);
  EXPECT_EQ(slurp(dir / "out.jsonl"), text);
}

TEST(Jsonl, KeyOrderIsCanonicalOnSave) {
  const auto dir = scratch("order");
  write(dir / "in.jsonl",
        R"({"id":"a1","response_b":"y","response_a":"x","gold_label":{"value":"-2","kind":"multiclass"},"context":"User: hi"})"
        "\n");
  save_dataset(dir / "out.jsonl", load_dataset(dir / "in.jsonl"));
  EXPECT_EQ(slurp(dir / "out.jsonl"), std::string(kLine) + "\n");
}

TEST(Jsonl, SchemaErrorsCarryLineNumbers) {
  std::istringstream missing(std::string(kLine) + "\n\n" + R"({"context":"c","id":"b","response_a":"p","response_b":"q"})");
  try {
    read_preferences(missing);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("gold_label"), std::string::npos);
  }
  std::istringstream garbage(std::string(kLine) + "\n{oops");
  try {
    read_preferences(garbage);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream bad_value(R"({"context":"c","gold_label":{"kind":"multiclass","value":"0"},"id":"b","response_a":"p","response_b":"q"})");
  EXPECT_THROW(read_preferences(bad_value), SchemaError);
  std::istringstream dup(std::string(kLine) + "\n" + kLine);
  EXPECT_THROW(read_preferences(dup), SchemaError);
}

TEST(Jsonl, EmptyFileIsEmptyDataset) {
  std::istringstream empty("");
  EXPECT_TRUE(read_preferences(empty).empty());
  std::istringstream blank("\n  \n");
  EXPECT_TRUE(read_trajectories(blank).empty());
}

TEST(Jsonl, UnknownFieldsStrictAndLenient) {
  const std::string line =
      R"({"context":"c","extra":1,"gold_label":{"kind":"binary","value":"A"},"id":"b","response_a":"p","response_b":"q"})";
  std::istringstream strict(line);
  EXPECT_THROW(read_preferences(strict), SchemaError);
  std::istringstream lenient(line);
  LoadWarnings warnings;
  EXPECT_EQ(read_preferences(lenient, {false}, &warnings).size(), 1u);
  ASSERT_EQ(warnings.messages.size(), 1u);
  EXPECT_NE(warnings.messages[0].find("extra"), std::string::npos);
}

TEST(Jsonl, TurnListContextIsFlattened) {
  std::istringstream in(
      R"({"context":[{"role":"user","content":"q"},{"role":"assistant","content":"a"}],"gold_label":{"kind":"binary","value":"A"},"id":"b","response_a":"p","response_b":"q"})");
  EXPECT_EQ(read_preferences(in)[0].context, "User: q\nAssistant: a");
}

TEST(Jsonl, TrajectoryLengthDefaultsToTokenCount) {
  std::istringstream in(
      R"({"example_id":"e","predicted_label":{"kind":"binary","value":"B"},"reasoning":"one two  three"})"
      "\n"
      R"({"example_id":"e","predicted_label":{"kind":"binary","value":"B"},"reasoning":"x","reasoning_len":40})");
  const auto ts = read_trajectories(in);
  EXPECT_EQ(ts[0].reasoning_len, 3u);
  EXPECT_EQ(ts[1].reasoning_len, 40u);
}

TEST(Matrices, JsonRoundTrip) {
  PreferenceMatrix d(3, "grp");
  d.set_pair(0, 2, 0.125);
  d.set_pair(1, 2, -3.0);
  std::istringstream in(to_json(d).dump() + "\n");
  const auto back = read_matrices(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], d);
}

TEST(Metrics, CsvRoundTripKeepsNan) {
  std::vector<StepMetrics> rows(2);
  rows[0].mean_true_reward = 0.125;
  rows[0].mean_reward = 0.1 + 0.2;
  rows[0].judge_errors = 3;
  rows[1].step = 1;
  rows[1].mean_true_reward = 1.0 / 3.0;
  rows[1].mean_reward = std::nan("");
  rows[1].clip_frac = 0.25;
  rows[1].kl = 1e-7;
  std::stringstream buf;
  write_metrics_csv(buf, rows);
  EXPECT_EQ(buf.str().substr(0, buf.str().find('\n')), kMetricsHeader);
  const auto back = read_metrics_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].mean_reward, 0.1 + 0.2);
  EXPECT_EQ(back[1].mean_true_reward, 1.0 / 3.0);
  EXPECT_TRUE(std::isnan(back[1].mean_reward));
  EXPECT_EQ(back[0].judge_errors, 3u);
}

TEST(Config, JsonRoundTripAndRejectsUnknownKeys) {
  RunConfig c;
  c.seed = 99;
  c.judge.sim.p_max = 0.8;
  c.judge.remote.token = "never-written";
  c.mode = AdvMode::PointwiseRule;
  c.train.steps = 17;
  const auto j = to_json(c);
  EXPECT_EQ(j.dump().find("never-written"), std::string::npos);
  const auto back = run_config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(back.train.seed, 99u);

  auto bad = j;
  bad["train"]["stpes"] = 3;
  EXPECT_THROW(run_config_from_json(bad), ConfigError);
  bad = j;
  bad["judge"]["kind"] = "ternary";
  EXPECT_THROW(run_config_from_json(bad), ConfigError);
  bad = j;
  bad["vote"]["m"] = 0;
  EXPECT_THROW(validate(run_config_from_json(bad)), ConfigError);
}

TEST(Cli, OracleCommand) {
  const auto dir = scratch("oracle");
  const auto r = cli({"--out", dir.string(), "oracle", "--groups", "1000", "--g", "8", "--seed", "1"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_LE(field(r.out, "max_abs_diff"), 1e-9);
  EXPECT_LE(field(r.out, "grad_max_rel_err"), 1e-4);
  EXPECT_TRUE(fs::exists(dir / "config.resolved.json"));
}

TEST(Cli, CurateReportsAllWrongInstance) {
  const auto dir = scratch("curate");
  write(dir / "ex.jsonl",
        R"({"context":"c","gold_label":{"kind":"binary","value":"A"},"id":"e1","response_a":"p","response_b":"q"})"
        "\n"
        R"({"context":"c","gold_label":{"kind":"binary","value":"B"},"id":"e2","response_a":"p","response_b":"q"})"
        "\n");
  std::string trajs;
  for (int k = 0; k < 10; ++k) {
    trajs += R"({"example_id":"e1","predicted_label":{"kind":"binary","value":"A"},"reasoning":"fine"})"
             "\n";
    trajs += R"({"example_id":"e2","predicted_label":{"kind":"binary","value":"A"},"reasoning":"wrong"})"
             "\n";
  }
  write(dir / "tr.jsonl", trajs);
  const auto r = cli({"--out", dir.string(), "curate", "--examples", (dir / "ex.jsonl").string(), "--trajectories",
                      (dir / "tr.jsonl").string()});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("discarded=1"), std::string::npos) << r.out;
  EXPECT_NE(slurp(dir / "warmup.jsonl").find("\"example_id\":\"e1\""), std::string::npos);
}

TEST(Cli, JudgeVoteMatchesBinomialPrediction) {
  const auto dir = scratch("judge");
  ASSERT_EQ(cli({"--out", dir.string(), "synth", "--examples", "3000", "--m", "1"}).code, 0);
  const auto r = cli({"--out", dir.string(), "--seed", "5", "judge", "--dataset", (dir / "dataset.jsonl").string(),
                      "--vote", "16", "--p-max", "0.8"});
  ASSERT_EQ(r.code, 0) << r.err;
  const double want = binomial_vote_accuracy(0.8, 16);
  EXPECT_NEAR(field(r.out, "predicted_binary_accuracy"), want, 1e-12);
  EXPECT_NEAR(field(r.out, "accuracy"), want, 3.0 * std::sqrt(want * (1 - want) / 3000));
}

TEST(Cli, ErrorsAreMachineParsable) {
  const auto dir = scratch("errors");
  write(dir / "bad.jsonl", std::string(kLine) + "\n{\"id\":3}\n");
  auto r = cli({"--out", dir.string(), "judge", "--dataset", (dir / "bad.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: SchemaError: line 2", 0), 0u) << r.err;
  r = cli({"--out", dir.string(), "judge"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ConfigError:", 0), 0u) << r.err;
  r = cli({"--out", dir.string(), "train", "--adv", "sideways"});
  EXPECT_EQ(r.code, 2);
  r = cli({"--out", dir.string(), "train", "--p-max", "0.3"});
  EXPECT_EQ(r.code, 1);
  r = cli({"--out", dir.string(), "judge", "--dataset", (dir / "missing.jsonl").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, FlagsOverrideConfigFile) {
  const auto dir = scratch("precedence");
  write(dir / "cfg.json", R"({"seed": 3, "train": {"steps": 9, "mode": "pointwise"}, "io": {"out": "ignored"}})");
  const auto r = cli({"--config", (dir / "cfg.json").string(), "--out", dir.string(), "train", "--steps", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto resolved = nlohmann::json::parse(slurp(dir / "config.resolved.json"));
  EXPECT_EQ(resolved["seed"], 3);
  EXPECT_EQ(resolved["train"]["steps"], 4);
  EXPECT_EQ(resolved["train"]["mode"], "pointwise");
  EXPECT_EQ(resolved["io"]["out"], dir.string());
}

TEST(Cli, RerunsFromResolvedConfigAreBitIdentical) {
  const auto a = scratch("a");
  const auto b = scratch("b");
  write(a / "groups.jsonl",
        R"({"context":"c","group_id":"g0","responses":["r0","r1","r2","r3"],"rewards":[0.1,0.4,0.35,0.9]})"
        "\n"
        R"({"context":"c","group_id":"g1","responses":["s0","s1","s2"],"rewards":[0.5,0.5,0.2]})"
        "\n");
  const std::vector<std::vector<std::string>> commands{
      {"synth", "--examples", "40"},
      {"matrix", "--groups", (a / "groups.jsonl").string(), "--kind", "multiclass", "--roles", "random"},
      {"train", "--adv", "pairwise", "--steps", "25"},
      {"judge", "--dataset", (a / "dataset.jsonl").string(), "--vote", "3"},
  };
  for (const auto& command : commands) {
    std::vector<std::string> args{"--seed", "17", "--out", a.string()};
    args.insert(args.end(), command.begin(), command.end());
    const auto first = cli(args);
    ASSERT_EQ(first.code, 0) << first.err;
    const auto resolved = b / ("config_" + command[0] + ".json");
    auto cfg = nlohmann::json::parse(slurp(a / "config.resolved.json"));
    cfg["io"]["out"] = b.string();
    write(resolved, cfg.dump());
    const auto second = cli({"--config", resolved.string(), command[0]});
    ASSERT_EQ(second.code, 0) << second.err;
    EXPECT_EQ(first.out, second.out);
  }
  for (const char* name : {"dataset.jsonl", "trajectories.jsonl", "matrices.jsonl", "advantages.jsonl", "metrics.csv",
                           "final_policy.json", "judgments.jsonl"}) {
    ASSERT_TRUE(fs::exists(a / name)) << name;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
}

TEST(Cli, ReportSummarizesRuns) {
  const auto dir = scratch("report");
  ASSERT_EQ(cli({"--out", dir.string(), "train", "--adv", "pointwise", "--steps", "50"}).code, 0);
  const auto r = cli({"--out", dir.string(), "report", (dir / "metrics.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto summary = slurp(dir / "summary.csv");
  EXPECT_EQ(summary.rfind("run,steps,initial_true_reward,final_true_reward,improvement,mean_clip_frac,final_kl,judge_errors\n", 0),
            0u);
  EXPECT_NE(summary.find(",50,0.12500000000000003,"), std::string::npos) << summary;
}

}  // namespace
}  // namespace pairadv
