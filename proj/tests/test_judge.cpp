#include "pairadv/judge.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "pairadv/errors.hpp"
#include "pairadv/oracle.hpp"

namespace pairadv {
namespace {

const PreferenceExample kBinaryEx{"e", "ctx", "first", "second", PreferenceLabel::binary(BinaryChoice::B)};
const PreferenceExample kMultiEx{"m", "ctx", "first", "second", PreferenceLabel::multiclass(-2)};

Judgment vote_for(PreferenceLabel label) {
  Judgment j;
  j.label = label;
  return j;
}

std::vector<Judgment> ballot(std::initializer_list<int> values) {
  std::vector<Judgment> out;
  for (int v : values) out.push_back(vote_for(PreferenceLabel::multiclass(v)));
  return out;
}

TEST(SimJudge, ProbabilityAndLengthLimits) {
  SimJudgeConfig cfg;
  EXPECT_DOUBLE_EQ(sim_correct_probability(0.0, cfg), 0.5);
  EXPECT_NEAR(sim_correct_probability(100.0, cfg), cfg.p_max, 1e-12);
  EXPECT_LT(sim_correct_probability(0.01, cfg), sim_correct_probability(0.02, cfg));
  EXPECT_EQ(sim_reasoning_len(0.0, cfg), cfg.len_max);
  EXPECT_EQ(sim_reasoning_len(100.0, cfg), cfg.len_min);
  EXPECT_GE(sim_reasoning_len(0.1, cfg), sim_reasoning_len(0.2, cfg));
  EXPECT_EQ(sim_magnitude(0.19, cfg), 1);
  EXPECT_EQ(sim_magnitude(0.2, cfg), 2);
  EXPECT_EQ(sim_magnitude(0.5, cfg), 3);
}

TEST(SimJudge, RejectsNegativeGapAndBadConfig) {
  Rng rng(1);
  EXPECT_THROW(sim_judge(kBinaryEx, -0.1, {}, rng), NegativeGap);
  SimJudgeConfig bad;
  bad.p_max = 0.4;
  EXPECT_THROW(SimulatedJudge{bad}, ConfigError);
  bad.p_max = 0.5;
  EXPECT_NO_THROW(SimulatedJudge{bad});
}

TEST(SimJudge, CorrectFrequencyWithinThreeSigma) {
  const SimJudgeConfig cfg;
  const double gap = 0.07;
  const double p = sim_correct_probability(gap, cfg);
  const std::size_t n = 20000;
  std::size_t correct = 0;
  const Rng root(3);
  for (std::size_t k = 0; k < n; ++k) {
    Rng r = root.substream(static_cast<std::uint64_t>(k));
    const auto j = sim_judge(kBinaryEx, gap, cfg, r);
    if (j.label == kBinaryEx.gold_label) ++correct;
    EXPECT_EQ(j.reasoning_len, sim_reasoning_len(gap, cfg));
  }
  EXPECT_NEAR(static_cast<double>(correct) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(SimJudge, MulticlassMagnitudeFollowsGap) {
  SimJudgeConfig cfg;
  cfg.p_max = 1.0;
  cfg.kappa = 1e9;
  Rng rng(2);
  EXPECT_EQ(sim_judge(kMultiEx, 0.1, cfg, rng).label, PreferenceLabel::multiclass(-1));
  EXPECT_EQ(sim_judge(kMultiEx, 0.3, cfg, rng).label, PreferenceLabel::multiclass(-2));
  EXPECT_EQ(sim_judge(kMultiEx, 0.9, cfg, rng).label, PreferenceLabel::multiclass(-3));
}

TEST(SimJudge, ReexpressesGoldInRequestedKind) {
  SimJudgeConfig cfg;
  cfg.p_max = 1.0;
  cfg.kappa = 1e9;
  const SimulatedJudge judge(cfg);
  Rng rng(4);
  EXPECT_EQ(judge.judge(LabelKind::Binary, kMultiEx, 1.0, rng).label, PreferenceLabel::binary(BinaryChoice::A));
  EXPECT_EQ(judge.judge(LabelKind::Multiclass, kBinaryEx, 1.0, rng).label, PreferenceLabel::multiclass(3));
}

TEST(SimJudge, SameStreamSameJudgment) {
  const SimulatedJudge judge({});
  Rng a(9), b(9);
  for (int k = 0; k < 50; ++k) {
    const auto x = judge.judge(LabelKind::Binary, kBinaryEx, 0.02, a);
    const auto y = judge.judge(LabelKind::Binary, kBinaryEx, 0.02, b);
    EXPECT_EQ(x.label, y.label);
    EXPECT_EQ(x.reasoning, y.reasoning);
  }
}

TEST(MajorityVote, BinaryPlurality) {
  const auto a = vote_for(PreferenceLabel::binary(BinaryChoice::A));
  const auto b = vote_for(PreferenceLabel::binary(BinaryChoice::B));
  Rng rng(0);
  const std::vector<Judgment> votes{a, b, b};
  EXPECT_EQ(majority_vote(votes, {3}, rng), b.label);
}

TEST(MajorityVote, TiesAreSeededAndOrderFree) {
  const auto a = vote_for(PreferenceLabel::binary(BinaryChoice::A));
  const auto b = vote_for(PreferenceLabel::binary(BinaryChoice::B));
  std::size_t picked_a = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng r1(s), r2(s);
    const std::vector<Judgment> ab{a, b}, ba{b, a};
    const auto x = majority_vote(ab, {2}, r1);
    EXPECT_EQ(x, majority_vote(ba, {2}, r2));
    picked_a += x == a.label ? 1 : 0;
  }
  EXPECT_GT(picked_a, 60u);
  EXPECT_LT(picked_a, 140u);
}

TEST(MajorityVote, MulticlassStrictMajorityThenSign) {
  Rng rng(0);
  EXPECT_EQ(majority_vote(ballot({2, 2, 2, -3, -3}), {5}, rng), PreferenceLabel::multiclass(2));
  // No strict majority: positive side wins 3-2, then 1 beats 3 within it.
  EXPECT_EQ(majority_vote(ballot({1, 1, 3, -3, -3}), {5}, rng), PreferenceLabel::multiclass(1));
  // Sign tie resolves to one of the per-sign winners.
  for (std::uint64_t s = 0; s < 20; ++s) {
    Rng r(s);
    const auto got = majority_vote(ballot({-1, -1, 2, 2}), {4}, r);
    EXPECT_TRUE(got == PreferenceLabel::multiclass(-1) || got == PreferenceLabel::multiclass(2));
  }
}

TEST(MajorityVote, Errors) {
  Rng rng(0);
  EXPECT_THROW(majority_vote({}, {1}, rng), EmptyBallot);
  std::vector<Judgment> mixed = ballot({1});
  mixed.push_back(vote_for(PreferenceLabel::binary(BinaryChoice::A)));
  EXPECT_THROW(majority_vote(mixed, {2}, rng), KindMismatch);
  EXPECT_THROW(validate(VoteConfig{0}), ConfigError);
}

// Fails with the configured reason on the first `failures` calls of each stream.
class FlakyJudge final : public Judge {
 public:
  FlakyJudge(JudgeError::Reason reason, int failures) : reason_(reason), failures_(failures) {}
  Judgment judge(LabelKind, const PreferenceExample& ex, double, Rng& rng) const override {
    ++calls_;
    if (rng.uniform() < 0.5 && failures_ < 0) throw JudgeError(reason_, "coin");
    if (calls_ <= failures_) throw JudgeError(reason_, "scripted");
    return vote_for(ex.gold_label);
  }
  mutable std::atomic<int> calls_{0};

 private:
  JudgeError::Reason reason_;
  int failures_;
};

TEST(JudgeWithRetries, RetriesTransportFailures) {
  FlakyJudge flaky(JudgeError::Reason::Transport, 2);
  EXPECT_EQ(judge_with_retries(flaky, LabelKind::Binary, kBinaryEx, 0, CallPolicy{2, 1}, Rng(1)).label,
            kBinaryEx.gold_label);
  EXPECT_EQ(flaky.calls_, 3);
  FlakyJudge hopeless(JudgeError::Reason::Transport, 5);
  EXPECT_THROW(judge_with_retries(hopeless, LabelKind::Binary, kBinaryEx, 0, CallPolicy{1, 1}, Rng(1)), JudgeError);
  EXPECT_EQ(hopeless.calls_, 2);
}

TEST(SampleAndVote, DropsParseFailures) {
  FlakyJudge coin(JudgeError::Reason::Parse, -1);
  const auto out = sample_and_vote(coin, LabelKind::Binary, kBinaryEx, 0, {15}, Rng(6));
  EXPECT_EQ(out.ballot.size() + out.parse_errors, 15u);
  EXPECT_GT(out.parse_errors, 0u);
  ASSERT_TRUE(out.label);
  EXPECT_EQ(*out.label, kBinaryEx.gold_label);

  FlakyJudge broken(JudgeError::Reason::Parse, 100);
  EXPECT_FALSE(sample_and_vote(broken, LabelKind::Binary, kBinaryEx, 0, {3}, Rng(6)).label);
  FlakyJudge down(JudgeError::Reason::Transport, 100);
  EXPECT_THROW(sample_and_vote(down, LabelKind::Binary, kBinaryEx, 0, {3}, Rng(6)), JudgeError);
}

TEST(BinomialVoteAccuracy, MatchesPascalEnumeration) {
  for (std::size_t m : {1, 2, 3, 4, 7, 16, 31}) {
    for (double p : {0.5, 0.6, 0.8, 0.95}) {
      // Row m of Pascal's triangle, built by addition only.
      std::vector<double> row{1.0};
      for (std::size_t r = 0; r < m; ++r) {
        std::vector<double> next(row.size() + 1, 0.0);
        for (std::size_t k = 0; k < row.size(); ++k) {
          next[k] += row[k];
          next[k + 1] += row[k];
        }
        row = std::move(next);
      }
      double expected = 0.0;
      for (std::size_t k = 0; k <= m; ++k) {
        const double mass = row[k] * std::pow(p, double(k)) * std::pow(1 - p, double(m - k));
        if (2 * k > m) expected += mass;
        if (2 * k == m) expected += 0.5 * mass;
      }
      EXPECT_NEAR(binomial_vote_accuracy(p, m), expected, 1e-12) << "m=" << m << " p=" << p;
    }
  }
  EXPECT_NEAR(binomial_vote_accuracy(0.5, 9), 0.5, 1e-12);
}

class ChatServer : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = nlohmann::json::parse(req.body);
      if (status_ != 200) {
        res.status = status_;
        return;
      }
      res.set_content(reply_, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  RemoteJudgeConfig config() const {
    RemoteJudgeConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
    cfg.timeout_seconds = 5;
    return cfg;
  }

  static std::string reply_with(const std::string& content) {
    return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  int status_ = 200;
  std::string reply_;
  std::string last_auth_;
  nlohmann::json last_body_;
};

TEST_F(ChatServer, ParsesReplyAndSendsContract) {
  reply_ = reply_with("A is vague. <answer>B</answer>");
  auto cfg = config();
  cfg.token = "secret";
  const RemoteJudge judge(cfg);
  Rng rng(0);
  const auto j = judge.judge(LabelKind::Binary, kBinaryEx, 0.0, rng);
  EXPECT_EQ(j.label, PreferenceLabel::binary(BinaryChoice::B));
  EXPECT_EQ(j.reasoning_len, 3u);
  EXPECT_EQ(last_auth_, "Bearer secret");
  EXPECT_EQ(last_body_["model"], "judge");
  EXPECT_EQ(last_body_["temperature"], 0.6);
  EXPECT_FALSE(last_body_.contains("top_p"));
  ASSERT_EQ(last_body_["messages"].size(), 2u);
  EXPECT_EQ(last_body_["messages"][0]["role"], "system");
  EXPECT_EQ(last_body_["messages"][0]["content"], std::string(system_template(LabelKind::Binary)));
  EXPECT_EQ(last_body_["messages"][1]["content"], render_prompt(LabelKind::Binary, kBinaryEx).user_text);
}

TEST_F(ChatServer, UnparseableAnswerIsParseFailureWithRawText) {
  reply_ = reply_with("I cannot decide.");
  try {
    remote_judge(kBinaryEx, LabelKind::Binary, config());
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.reason(), JudgeError::Reason::Parse);
    EXPECT_EQ(e.raw(), "I cannot decide.");
  }
}

TEST_F(ChatServer, HttpAndShapeErrorsAreTransportFailures) {
  auto reason = [&] {
    try {
      remote_judge(kBinaryEx, LabelKind::Binary, config());
    } catch (const JudgeError& e) {
      return e.reason();
    }
    ADD_FAILURE();
    return JudgeError::Reason::Parse;
  };
  status_ = 503;
  EXPECT_EQ(reason(), JudgeError::Reason::Transport);
  status_ = 200;
  reply_ = R"({"choices":[]})";
  EXPECT_EQ(reason(), JudgeError::Reason::Transport);
  auto cfg = config();
  cfg.top_p = 0.9;
  reply_ = reply_with("<answer>A</answer>");
  remote_judge(kBinaryEx, LabelKind::Binary, cfg);
  EXPECT_EQ(last_body_["top_p"], 0.9);
}

TEST(RemoteJudge, UnreachableServerAndMissingUrl) {
  RemoteJudgeConfig cfg;
  EXPECT_THROW(RemoteJudge{cfg}, ConfigError);
  cfg.url = "http://127.0.0.1:1/v1/chat/completions";
  cfg.timeout_seconds = 1;
  try {
    remote_judge(kBinaryEx, LabelKind::Binary, cfg);
    FAIL();
  } catch (const JudgeError& e) {
    EXPECT_EQ(e.reason(), JudgeError::Reason::Transport);
  }
}

}  // namespace
}  // namespace pairadv
