#include <cstdlib>

#include <httplib.h>

#include "pairadv/errors.hpp"
#include "pairadv/judge.hpp"

namespace pairadv {
namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw JudgeError(JudgeError::Reason::Transport, "judge url lacks a scheme: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace

void apply_judge_env(RemoteJudgeConfig& cfg) {
  if (const char* url = std::getenv("PAIRADV_JUDGE_URL"); url != nullptr && *url != '\0') cfg.url = url;
  if (const char* token = std::getenv("PAIRADV_JUDGE_TOKEN"); token != nullptr && *token != '\0') cfg.token = token;
}

nlohmann::json chat_request_body(const TaskInstruction& instruction, const RemoteJudgeConfig& cfg) {
  nlohmann::json body = {
      {"model", cfg.model},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", instruction.system_text}},
                              {{"role", "user"}, {"content", instruction.user_text}}})},
      {"temperature", cfg.temperature},
      {"max_tokens", cfg.max_tokens},
  };
  if (cfg.top_p != 1.0) body["top_p"] = cfg.top_p;
  return body;
}

std::string chat_response_content(const std::string& body) {
  const auto doc = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw JudgeError(JudgeError::Reason::Transport, "response is not JSON", body);
  try {
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw JudgeError(JudgeError::Reason::Transport, "response lacks choices[0].message.content", body);
  }
}

Judgment remote_judge(const PreferenceExample& ex, LabelKind kind, const RemoteJudgeConfig& cfg) {
  const auto instruction = render_prompt(kind, ex);
  const auto endpoint = split_url(cfg.url);

  httplib::Client client(endpoint.base);
  client.set_connection_timeout(cfg.timeout_seconds, 0);
  client.set_read_timeout(cfg.timeout_seconds, 0);
  httplib::Headers headers;
  if (!cfg.token.empty()) headers.emplace("Authorization", "Bearer " + cfg.token);

  const auto res = client.Post(endpoint.path, headers, chat_request_body(instruction, cfg).dump(), "application/json");
  if (!res) {
    throw JudgeError(JudgeError::Reason::Transport, "request to " + cfg.url + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw JudgeError(JudgeError::Reason::Transport, "judge returned HTTP " + std::to_string(res->status), res->body);
  }
  const std::string content = chat_response_content(res->body);
  try {
    return parse_judgment(kind, content, cfg.tokens);
  } catch (const ParseError& e) {
    throw JudgeError(JudgeError::Reason::Parse, e.what(), content);
  }
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.url.empty()) throw ConfigError("remote judge needs a url (set PAIRADV_JUDGE_URL)");
}

Judgment RemoteJudge::judge(LabelKind kind, const PreferenceExample& ex, double /*true_gap*/, Rng& /*rng*/) const {
  return remote_judge(ex, kind, cfg_);
}

}  // namespace pairadv
