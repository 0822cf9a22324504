// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>

#include <json.hpp>

#include "pairadv/advantage.hpp"
#include "pairadv/cli.hpp"
#include "pairadv/curation.hpp"
#include "pairadv/kernels.hpp"
#include "pairadv/oracle.hpp"
#include "pairadv/rewards.hpp"
#include "pairadv/template.hpp"
#include "pairadv/trainer.hpp"

namespace fs = std::filesystem;
using namespace pairadv;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s [%d] %s: %s (%.2fs)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome equivalence() {
  const auto start = std::chrono::steady_clock::now();
  const Rng root = Rng(2024).substream("equivalence");
  double worst = 0.0;
  for (std::size_t g : {2, 3, 4, 8, 16}) {
    Rng r = root.substream(g);
    std::vector<double> rewards(1000 * g);
    for (double& x : rewards) x = r.normal();
    for (double eps : {0.0, 1e-6}) worst = std::max(worst, batch_equivalence_max_diff(rewards, g, AdvConfig{eps}));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-9 && secs < 1.0, fmt("max |pairwise - pointwise| = %.3g", worst) + fmt(", runtime %.3fs", secs)};
}

Outcome fixtures() {
  const AdvConfig none{0.0};
  const double h = std::sqrt(0.5);
  const std::vector<double> two{1, 0}, three{1, 0.5, 0};
  const std::vector<double> want2{h, -h}, want3{1, 0, -1};
  const double err = std::max({max_abs_diff(grpo_advantage(two, none), want2),
                               max_abs_diff(pairwise_advantage(PreferenceMatrix::from_rewards(two), none), want2),
                               max_abs_diff(grpo_advantage(three, none), want3),
                               max_abs_diff(pairwise_advantage(PreferenceMatrix::from_rewards(three), none), want3)});
  return {err <= 1e-9, fmt("max error over both estimators %.3g", err)};
}

Outcome reward_tables() {
  int cells = 0, wrong = 0;
  for (auto p : {BinaryChoice::A, BinaryChoice::B}) {
    for (auto g : {BinaryChoice::A, BinaryChoice::B}) {
      ++cells;
      wrong += binary_reward(PreferenceLabel::binary(p), PreferenceLabel::binary(g)) != (p == g ? 1.0 : 0.0);
    }
  }
  for (int p : {-3, -2, -1, 1, 2, 3}) {
    for (int g : {-3, -2, -1, 1, 2, 3}) {
      const double want = p == g ? 1.0 : (p * g > 0 ? 0.5 : 0.0);
      ++cells;
      wrong += multiclass_reward(PreferenceLabel::multiclass(p), PreferenceLabel::multiclass(g)) != want;
    }
  }
  return {wrong == 0 && cells == 40, std::to_string(cells) + " cells, " + std::to_string(wrong) + " mismatches"};
}

Outcome matrix_invariants() {
  const Rng root = Rng(77).substream("matrices");
  std::size_t bad = 0;
  double worst_sum = 0.0, worst_scale = 0.0;
  const std::size_t n = 10000;
  for (std::size_t k = 0; k < n; ++k) {
    Rng r = root.substream(k);
    const std::size_t g = 2 + r.below(7);
    std::vector<GroupResponse> group(g);
    for (std::size_t i = 0; i < g; ++i) group[i] = {"response " + std::to_string(i), r.uniform()};
    SimJudgeConfig sim;
    sim.p_max = 0.6 + 0.4 * r.uniform();
    const SimulatedJudge judge(sim);
    const MatrixConfig cfg{r.below(2) ? LabelKind::Binary : LabelKind::Multiclass,
                           static_cast<RoleAssignment>(r.below(3))};
    const auto d = build_preference_matrix("g", "c", group, judge, cfg, r.substream("build")).matrix;
    for (std::size_t i = 0; i < g; ++i) {
      if (d(i, i) != 0.0) ++bad;
      for (std::size_t j = 0; j < g; ++j) {
        if (d(i, j) != -d(j, i)) ++bad;
      }
    }
    const AdvConfig none{0.0};
    const auto adv = pairwise_advantage(d, none);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(adv.begin(), adv.end(), 0.0)));
    const double c = std::exp(4.0 * (r.uniform() - 0.5));
    worst_scale = std::max(worst_scale, max_abs_diff(pairwise_advantage(d.scaled(c), none), adv));
  }
  return {bad == 0 && worst_sum <= 1e-9 && worst_scale <= 1e-9,
          std::to_string(n) + " matrices, " + std::to_string(bad) + " skew/diagonal violations" +
              fmt(", max |sum A| %.3g", worst_sum) + fmt(", max scale drift %.3g", worst_scale)};
}

Outcome curation() {
  const Rng root = Rng(31).substream("curation");
  // Selection properties on random corpora.
  std::size_t violations = 0;
  for (std::size_t k = 0; k < 2000; ++k) {
    Rng r = root.substream("select").substream(k);
    const PreferenceExample ex{"e", "c", "a", "b", PreferenceLabel::multiclass(r.below(2) ? 2 : -1)};
    std::vector<TrajectoryRecord> ts(1 + r.below(12));
    for (auto& t : ts) {
      t.example_id = "e";
      t.reasoning_len = r.below(20);
      t.predicted_label = r.bernoulli(0.4) ? ex.gold_label : flipped(ex.gold_label);
    }
    for (auto strategy : {CurationStrategy::LongestCorrect, CurationStrategy::ShortestCorrect}) {
      const auto pick = select_warmup_trajectory(ex, ts, {strategy});
      const TrajectoryRecord* expected = nullptr;
      for (const auto& t : ts) {
        if (!(t.predicted_label == ex.gold_label)) continue;
        const bool better = expected == nullptr ||
                            (strategy == CurationStrategy::LongestCorrect ? t.reasoning_len > expected->reasoning_len
                                                                          : t.reasoning_len < expected->reasoning_len);
        if (better) expected = &t;
      }
      if (expected == nullptr ? pick.has_value() : (!pick || pick->chosen.reasoning_len != expected->reasoning_len ||
                                                     !(pick->chosen.predicted_label == ex.gold_label))) {
        ++violations;
      }
    }
  }

  const double p = 0.3;
  const std::size_t n = 10000;
  Rng r = root.substream("rate");
  std::vector<PreferenceExample> examples;
  std::vector<TrajectoryRecord> trajs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto id = std::to_string(i);
    examples.push_back({id, "c", "a", "b", PreferenceLabel::binary(BinaryChoice::A)});
    for (int k = 0; k < 10; ++k) {
      trajs.push_back({id, "r", 1 + r.below(9),
                       PreferenceLabel::binary(r.bernoulli(p) ? BinaryChoice::A : BinaryChoice::B)});
    }
  }
  const double rate = build_warmup_dataset(examples, trajs, {}).second.discard_rate();
  const double q = std::pow(1.0 - p, 10);
  const double sigma = std::sqrt(q * (1 - q) / n);
  const bool rate_ok = std::abs(rate - q) <= 3 * sigma;
  return {violations == 0 && rate_ok, std::to_string(violations) + " selection violations" +
                                          fmt(", discard rate %.5f", rate) + fmt(" vs (1-p)^10 = %.5f", q) +
                                          fmt(" (3 sigma %.5f)", 3 * sigma)};
}

Outcome voting() {
  const std::size_t trials = 100000;
  const double want = binomial_vote_accuracy(0.8, 16);
  const double got = simulate_vote_accuracy(0.8, 16, trials, Rng(16).substream("votes"));
  const double sigma = std::sqrt(want * (1 - want) / trials);
  bool monotone = true;
  double prev = 0.0;
  for (std::size_t m = 1; m <= 21; m += 2) {
    const double sim = simulate_vote_accuracy(0.8, m, trials, Rng(16).substream("odd"));
    const double exact = binomial_vote_accuracy(0.8, m);
    if (sim < prev || exact < binomial_vote_accuracy(0.8, m > 1 ? m - 2 : 1)) monotone = false;
    prev = sim;
  }
  return {std::abs(got - want) <= 3 * sigma && monotone,
          fmt("simulated %.5f", got) + fmt(" vs binomial %.5f", want) + fmt(" (3 sigma %.5f)", 3 * sigma) +
              (monotone ? ", monotone over odd m" : ", NOT monotone over odd m")};
}

Outcome gradients() {
  const auto report = gradient_oracle(100, Rng(7).substream("gradients"));
  return {report.max() <= 1e-4, fmt("max relative error sft %.3g", report.sft_max_rel_err) +
                                    fmt(", kl %.3g", report.kl_max_rel_err) +
                                    fmt(", clipped objective %.3g", report.grpo_max_rel_err)};
}

Outcome end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  const auto task = SyntheticTask::random(8, 4, 0);
  TrainConfig cfg;
  cfg.group_size = 4;
  cfg.steps = 500;
  cfg.kl_beta = 1e-4;
  cfg.lr = 0.5;
  SimJudgeConfig judge_cfg;
  SimJudgeConfig noise_cfg;
  noise_cfg.p_max = 0.5;
  SimJudgeConfig perfect_cfg;
  perfect_cfg.p_max = 1.0;
  perfect_cfg.kappa = 1e9;
  const SimulatedJudge judge(judge_cfg), noise(noise_cfg), perfect(perfect_cfg);

  double pair_gain = 0, noise_gain = 0, pointwise_final = 0, perfect_final = 0;
  const int seeds = 5;
  for (int s = 1; s <= seeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    const auto a = train_rlhf(task, &judge, cfg, AdvMode::PairwiseMatrix);
    const auto b = train_rlhf(task, &noise, cfg, AdvMode::PairwiseMatrix);
    const auto c = train_rlhf(task, nullptr, cfg, AdvMode::PointwiseRule);
    const auto d = train_rlhf(task, &perfect, cfg, AdvMode::PairwiseMatrix);
    pair_gain += (a.final_true_reward() - a.initial_true_reward()) / seeds;
    noise_gain += (b.final_true_reward() - b.initial_true_reward()) / seeds;
    pointwise_final += c.final_true_reward() / seeds;
    perfect_final += d.final_true_reward() / seeds;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double gap = std::abs(pointwise_final - perfect_final);
  return {pair_gain >= 0.3 && noise_gain <= 0.05 && gap <= 0.05 && secs < 120.0,
          fmt("pairwise gain %.4f (>= 0.3)", pair_gain) + fmt(", noise-judge gain %.4f (<= 0.05)", noise_gain) +
              fmt(", |pointwise - perfect judge| %.4f (<= 0.05)", gap) + fmt(", runtime %.1fs", secs)};
}

Outcome templates() {
  const fs::path dir(PAIRADV_TEMPLATE_DIR);
  bool match = system_template(LabelKind::Binary) == slurp(dir / "binary_system.txt") &&
               system_template(LabelKind::Multiclass) == slurp(dir / "multiclass_system.txt") &&
               user_template() == slurp(dir / "user.txt");
  const PreferenceExample ex{"t", "User: what is 2+2?", "4", "5", PreferenceLabel::binary(BinaryChoice::A)};
  std::string user = slurp(dir / "user.txt");
  user.replace(user.find("{response2}"), 11, ex.response_b);
  user.replace(user.find("{response1}"), 11, ex.response_a);
  user.replace(user.find("{context}"), 9, ex.context);
  for (auto kind : {LabelKind::Binary, LabelKind::Multiclass}) {
    const auto prompt = render_prompt(kind, ex);
    match = match && prompt.user_text == user && prompt.system_text == system_template(kind);
  }
  int round_trips = 0;
  for (const auto& label : all_labels()) round_trips += parse_judgment(label.kind(), format_answer(label)).label == label;
  return {match && round_trips == 8, std::string(match ? "golden files match" : "golden files DIFFER") +
                                         ", parse(format(l)) == l for " + std::to_string(round_trips) + "/8 labels"};
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "pairadv_acceptance";
  fs::remove_all(root);
  const auto a = root / "a", b = root / "b";
  fs::create_directories(a);
  fs::create_directories(b);
  {
    std::ofstream g(a / "groups.jsonl");
    g << R"({"context":"c","group_id":"g0","responses":["r0","r1","r2","r3"],"rewards":[0.1,0.4,0.35,0.9]})" << '\n'
      << R"({"context":"c","group_id":"g1","responses":["s0","s1","s2"],"rewards":[0.5,0.52,0.2]})" << '\n';
  }
  const std::vector<std::vector<std::string>> commands{
      {"synth", "--examples", "200"},
      {"curate", "--examples", (a / "dataset.jsonl").string(), "--trajectories", (a / "trajectories.jsonl").string()},
      {"judge", "--dataset", (a / "dataset.jsonl").string(), "--vote", "5"},
      {"matrix", "--groups", (a / "groups.jsonl").string(), "--kind", "binary", "--roles", "random"},
      {"train", "--adv", "pairwise", "--steps", "60"},
  };
  std::ostringstream sink;
  for (const auto& command : commands) {
    std::vector<std::string> args{"--seed", "123", "--out", a.string()};
    args.insert(args.end(), command.begin(), command.end());
    omp_set_num_threads(1);
    if (run_cli(args, sink, sink) != 0) return {false, command[0] + " failed: " + sink.str()};
    auto cfg = nlohmann::json::parse(slurp(a / "config.resolved.json"));
    cfg["io"]["out"] = b.string();
    const auto resolved = root / (command[0] + ".json");
    std::ofstream(resolved) << cfg.dump(2);
    // Rerun from the resolved config with a different thread count.
    omp_set_num_threads(4);
    if (run_cli({"--config", resolved.string(), command[0]}, sink, sink) != 0) {
      return {false, command[0] + " rerun failed: " + sink.str()};
    }
  }
  int same = 0, total = 0;
  std::string differing;
  for (const char* name : {"dataset.jsonl", "trajectories.jsonl", "warmup.jsonl", "judgments.jsonl", "matrices.jsonl",
                           "advantages.jsonl", "metrics.csv", "final_policy.json"}) {
    ++total;
    const auto x = slurp(a / name);
    if (!x.empty() && x == slurp(b / name)) {
      ++same;
    } else {
      differing += std::string(" ") + name;
    }
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " outputs bit-identical on rerun" +
                             (differing.empty() ? "" : "; differ:" + differing)};
}

}  // namespace

int main() {
  run(1, "advantage equivalence", equivalence);
  run(2, "hand-algebra fixtures", fixtures);
  run(3, "reward tables", reward_tables);
  run(4, "matrix invariants", matrix_invariants);
  run(5, "curation", curation);
  run(6, "voting", voting);
  run(7, "gradient checks", gradients);
  run(8, "end-to-end pairwise RLHF", end_to_end);
  run(9, "template golden files", templates);
  run(10, "determinism", determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
