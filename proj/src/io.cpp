#include "pairadv/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "pairadv/errors.hpp"

namespace pairadv {
namespace {

using nlohmann::json;

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r\n") == std::string::npos; }

json parse_line(const std::string& line, std::size_t lineno) {
  auto j = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw SchemaError(lineno, "not valid JSON");
  if (!j.is_object()) throw SchemaError(lineno, "expected a JSON object");
  return j;
}

void check_fields(const json& j, const std::set<std::string>& known, std::size_t lineno, const LoadOptions& opts,
                  LoadWarnings* warnings) {
  for (const auto& [key, value] : j.items()) {
    if (known.count(key) != 0) continue;
    if (opts.strict) throw SchemaError(lineno, "unknown field '" + key + "'");
    if (warnings != nullptr) warnings->messages.push_back("line " + std::to_string(lineno) + ": ignored field '" + key + "'");
  }
}

const json& require(const json& j, const char* key, std::size_t lineno) {
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(lineno, std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& j, const char* key, std::size_t lineno) {
  const auto& v = require(j, key, lineno);
  if (!v.is_string()) throw SchemaError(lineno, std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

PreferenceLabel require_label(const json& j, const char* key, std::size_t lineno) {
  try {
    return label_from_json(require(j, key, lineno));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(lineno, std::string("field '") + key + "': " + e.what());
  }
}

std::string read_context(const json& j, std::size_t lineno) {
  const auto& v = require(j, "context", lineno);
  if (v.is_string()) return v.get<std::string>();
  if (!v.is_array()) throw SchemaError(lineno, "field 'context' must be a string or a list of turns");
  std::vector<Turn> turns;
  for (const auto& t : v) {
    if (!t.is_object() || !t.contains("role") || !t.contains("content")) {
      throw SchemaError(lineno, "context turns need 'role' and 'content'");
    }
    turns.push_back(Turn{t["role"].get<std::string>(), t["content"].get<std::string>()});
  }
  return flatten_turns(turns);
}

template <typename Parse>
auto read_lines(std::istream& in, Parse parse) {
  std::vector<decltype(parse(json{}, std::size_t{}))> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    out.push_back(parse(parse_line(line, lineno), lineno));
  }
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("IoError", "cannot write " + path.string());
  return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IoError", "cannot read " + path.string());
  return in;
}

}  // namespace

json label_to_json(const PreferenceLabel& label) {
  return json{{"kind", std::string(to_string(label.kind()))}, {"value", label.value_string()}};
}

PreferenceLabel label_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j.contains("value")) {
    throw SchemaError(0, "label needs 'kind' and 'value'");
  }
  const auto kind = label_kind_from_string(j["kind"].get<std::string>());
  const auto& v = j["value"];
  if (kind == LabelKind::Binary) {
    const auto s = v.is_string() ? v.get<std::string>() : std::string();
    if (s == "A") return PreferenceLabel::binary(BinaryChoice::A);
    if (s == "B") return PreferenceLabel::binary(BinaryChoice::B);
    throw ValidationError("label");
  }
  int value = 0;
  if (v.is_number_integer()) {
    value = v.get<int>();
  } else if (v.is_string()) {
    const auto s = v.get<std::string>();
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ValidationError("label");
  } else {
    throw ValidationError("label");
  }
  return PreferenceLabel::multiclass(value);
}

json to_json(const PreferenceExample& ex) {
  return json{{"id", ex.id},
              {"context", ex.context},
              {"response_a", ex.response_a},
              {"response_b", ex.response_b},
              {"gold_label", label_to_json(ex.gold_label)}};
}

json to_json(const TrajectoryRecord& t) {
  return json{{"example_id", t.example_id}, {"reasoning", t.reasoning}, {"predicted_label", label_to_json(t.predicted_label)}};
}

json to_json(const WarmupExample& w) {
  return json{{"example_id", w.example.id}, {"reasoning", w.chosen.reasoning}, {"label", label_to_json(w.chosen.predicted_label)}};
}

json to_json(const PreferenceMatrix& d) {
  return json{{"group_id", d.group_id()}, {"G", d.size()}, {"entries", d.entries()}};
}

json to_json(const SeqPolicy& p) {
  return json{{"vocab_size", p.vocab_size()},
              {"seq_len", p.seq_len()},
              {"logits", std::vector<double>(p.logits().begin(), p.logits().end())}};
}

std::vector<PreferenceExample> read_preferences(std::istream& in, const LoadOptions& opts, LoadWarnings* warnings) {
  static const std::set<std::string> known{"id", "context", "response_a", "response_b", "gold_label"};
  std::set<std::string> seen;
  return read_lines(in, [&](const json& j, std::size_t lineno) {
    check_fields(j, known, lineno, opts, warnings);
    PreferenceExample ex;
    ex.id = require_string(j, "id", lineno);
    ex.context = read_context(j, lineno);
    ex.response_a = require_string(j, "response_a", lineno);
    ex.response_b = require_string(j, "response_b", lineno);
    ex.gold_label = require_label(j, "gold_label", lineno);
    try {
      validate_example(ex);
    } catch (const ValidationError& e) {
      throw SchemaError(lineno, e.what());
    }
    if (!seen.insert(ex.id).second) throw SchemaError(lineno, "duplicate id '" + ex.id + "'");
    return ex;
  });
}

std::vector<TrajectoryRecord> read_trajectories(std::istream& in, const LoadOptions& opts, LoadWarnings* warnings) {
  static const std::set<std::string> known{"example_id", "reasoning", "predicted_label", "reasoning_len"};
  return read_lines(in, [&](const json& j, std::size_t lineno) {
    check_fields(j, known, lineno, opts, warnings);
    TrajectoryRecord t;
    t.example_id = require_string(j, "example_id", lineno);
    t.reasoning = require_string(j, "reasoning", lineno);
    t.predicted_label = require_label(j, "predicted_label", lineno);
    if (const auto it = j.find("reasoning_len"); it != j.end()) {
      if (!it->is_number_unsigned()) throw SchemaError(lineno, "field 'reasoning_len' must be a non-negative integer");
      t.reasoning_len = it->get<std::size_t>();
    } else {
      t.reasoning_len = count_tokens(t.reasoning, opts.tokens);
    }
    return t;
  });
}

std::vector<PreferenceMatrix> read_matrices(std::istream& in) {
  return read_lines(in, [](const json& j, std::size_t lineno) {
    try {
      const auto g = j.at("G").get<std::size_t>();
      PreferenceMatrix d(g, j.at("entries").get<std::vector<double>>(), j.at("group_id").get<std::string>());
      d.check();
      return d;
    } catch (const json::exception& e) {
      throw SchemaError(lineno, e.what());
    } catch (const Error& e) {
      throw SchemaError(lineno, e.what());
    }
  });
}

std::vector<PreferenceExample> load_dataset(const std::filesystem::path& path, const LoadOptions& opts,
                                            LoadWarnings* warnings) {
  auto in = open_for_read(path);
  return read_preferences(in, opts, warnings);
}

std::vector<TrajectoryRecord> load_trajectories(const std::filesystem::path& path, const LoadOptions& opts,
                                                LoadWarnings* warnings) {
  auto in = open_for_read(path);
  return read_trajectories(in, opts, warnings);
}

void write_jsonl(std::ostream& out, std::span<const json> rows) {
  for (const auto& row : rows) out << row.dump() << '\n';
}

namespace {
template <typename T>
void save_rows(const std::filesystem::path& path, std::span<const T> items) {
  auto out = open_for_write(path);
  for (const auto& item : items) out << to_json(item).dump() << '\n';
}
}  // namespace

void save_dataset(const std::filesystem::path& path, std::span<const PreferenceExample> examples) {
  save_rows(path, examples);
}

void save_trajectories(const std::filesystem::path& path, std::span<const TrajectoryRecord> records) {
  save_rows(path, records);
}

void save_warmup(const std::filesystem::path& path, std::span<const WarmupExample> warmup) { save_rows(path, warmup); }

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

void write_metrics_csv(std::ostream& out, std::span<const StepMetrics> metrics) {
  out << kMetricsHeader << '\n';
  for (const auto& m : metrics) {
    out << m.step << ',' << format_double(m.mean_true_reward) << ',' << format_double(m.mean_reward) << ','
        << format_double(m.clip_frac) << ',' << format_double(m.kl) << ',' << m.judge_errors << '\n';
  }
}

std::vector<StepMetrics> read_metrics_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || line != kMetricsHeader) throw SchemaError(lineno, "unexpected metrics header");
  auto parse = [](const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); };
  std::vector<StepMetrics> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 6) throw SchemaError(lineno, "expected 6 columns");
    try {
      StepMetrics m;
      m.step = std::stoull(cells[0]);
      m.mean_true_reward = parse(cells[1]);
      m.mean_reward = parse(cells[2]);
      m.clip_frac = parse(cells[3]);
      m.kl = parse(cells[4]);
      m.judge_errors = std::stoull(cells[5]);
      out.push_back(m);
    } catch (const std::exception&) {
      throw SchemaError(lineno, "malformed number");
    }
  }
  return out;
}

}  // namespace pairadv
