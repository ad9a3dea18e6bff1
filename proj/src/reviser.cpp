#include "asmr/reviser.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "asmr/errors.hpp"
#include "asmr/msl/parse.hpp"
#include "asmr/msl/typecheck.hpp"

namespace asmr {

namespace {

constexpr const char* kPromptIntro =
    "I am studying human behavior in a multi-attribute decision-making "
    "experiment.\n"
    "\n"
    "In this experiment, participants encounter a number of trials, in which "
    "they have to choose between two options labelled A and B.\n"
    "\n"
    "These options are fictitious products that are each characterized by "
    "four features.\n"
    "\n"
    "Each feature corresponds to a binary rating of an expert, either "
    "approving of the product (1) or not (0).\n"
    "\n"
    "The four experts are ordered based on their validity (taking values of "
    "90%, 80%, 70%, and 60%), with the first feature corresponding to the "
    "ratings from the highest validity expert.\n"
    "\n"
    "In each trial, people have to predict which of the shown options is "
    "superior in terms of quality based on the presented information.\n"
    "\n"
    "I have the following computational model that is currently my best "
    "guess for how people make decisions in this experiment:\n";

constexpr const char* kLanguageNote =
    "The model is written in a small modeling language. A program is a line "
    "`params <k>;` declaring the number of free parameters, followed by "
    "`model = <expression>;`. The expression may use the trial feature "
    "matrices A and B (one row per trial, one column per expert rating), the "
    "free parameters p[0] .. p[k-1], numbers, vectors of four numbers such "
    "as [0.9, 0.8, 0.7, 0.6], arithmetic (+, -, *, /), comparisons (<, <=, "
    ">, >=, ==, !=) yielding 0/1, and the functions dot(matrix, vector), "
    "sum(x), logistic(x), exp(x), log(x), abs(x), min(x, y), max(x, y), "
    "clip(x, lo, hi) and where(condition, x, y). It must evaluate to one "
    "probability of choosing option B per trial. There are no loops, no "
    "assignments and no other functions.\n";

constexpr const char* kPromptMiddle =
    "This model does capture human behavior reasonably well overall, but "
    "there are the following data points in which it does not capture human "
    "behavior yet:\n";

constexpr const char* kPromptOutro =
    "Can you suggest an improved model that is able to capture human "
    "behavior in the listed situations?\n"
    "\n"
    "Please structure your answer as follows:\n"
    "\n"
    "* Keep the structure of the program exactly the same: one `params <k>;` "
    "line followed by one `model = <expression>;` definition in the same "
    "modeling language.\n"
    "\n"
    "* State the number of free parameters in the `params <k>;` line before "
    "the model expression.\n"
    "\n"
    "* Do not write any text besides that and do not elaborate any further.\n";

std::string render_ratings(const std::vector<double>& features) {
  std::string out = "[";
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(static_cast<int>(features[i]));
  }
  out += "]";
  return out;
}

std::string render_prob(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

std::string render_point(const RegretPoint& p) {
  std::string out;
  out += "Option A ratings: " + render_ratings(p.option_a);
  out += "; Option B ratings: " + render_ratings(p.option_b);
  out += "; human choice: ";
  out += choice_letter(p.human_choice);
  out += "; model P(choice) = " + render_prob(p.model_prob_of_choice);
  out += "; reference P(choice) = " + render_prob(std::exp(-p.reference_nll));
  return out;
}

// Removes well-formed <think>...</think> spans, the reasoning preamble
// emitted by reasoning models.
std::string strip_think_blocks(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t open = text.find("<think>", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    std::size_t close = text.find("</think>", open);
    if (close == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    pos = close + 8;
  }
  return out;
}

// Contents of ``` fenced blocks, or the whole text when there are none.
std::vector<std::string> candidate_regions(const std::string& text) {
  std::vector<std::string> regions;
  std::size_t pos = 0;
  while (true) {
    std::size_t open = text.find("```", pos);
    if (open == std::string::npos) break;
    std::size_t body = text.find('\n', open);
    if (body == std::string::npos) break;
    std::size_t close = text.find("```", body);
    if (close == std::string::npos) break;
    regions.push_back(text.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  if (regions.empty()) regions.push_back(text);
  return regions;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// "params <int> ;" ahead of `pos`? Distinguishes a program header from prose
// that merely mentions the word.
bool looks_like_header(const std::string& text, std::size_t pos) {
  std::size_t i = pos + 6;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  std::size_t digits = i;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
    ++i;
  if (i == digits) return false;
  while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
  return i < text.size() && text[i] == ';';
}

}  // namespace

const char* revision_status_name(RevisionStatus s) {
  switch (s) {
    case RevisionStatus::accepted: return "accepted";
    case RevisionStatus::parse_failed_exhausted:
      return "parse_failed_exhausted";
    case RevisionStatus::endpoint_error: return "endpoint_error";
  }
  return "?";
}

void validate(const ReviserConfig& config) {
  if (config.max_retries < 0)
    throw ValidationError("max_retries must be >= 0");
  if (config.timeout_seconds <= 0)
    throw ValidationError("timeout must be positive");
  if (config.max_points_in_prompt < 1)
    throw ValidationError("max_points_in_prompt must be >= 1");
  if (config.mode == ReviserMode::llm && config.endpoint_url.empty())
    throw ValidationError("llm mode requires an endpoint URL");
  if (config.mode == ReviserMode::scripted && config.script_id.empty())
    throw ValidationError("scripted mode requires a script directory");
}

PromptBundle build_prompt(const msl::ModelProgram& current_model,
                          const RegretSet& regret, int cap) {
  if (regret.empty())
    throw EmptyRegretSet("regret set is empty; nothing to revise");
  if (cap < 1) throw ValidationError("prompt point cap must be >= 1");

  PromptBundle bundle;
  bundle.rendered_points =
      static_cast<int>(std::min<std::size_t>(regret.size(), cap));

  std::ostringstream out;
  out << kPromptIntro << '\n';
  out << current_model.source;
  if (current_model.source.empty() || current_model.source.back() != '\n')
    out << '\n';
  out << '\n' << kLanguageNote << '\n';
  out << kPromptMiddle << '\n';
  for (int i = 0; i < bundle.rendered_points; ++i)
    out << render_point(regret.points[i]) << '\n';
  out << '\n' << kPromptOutro;

  bundle.user_text = out.str();
  return bundle;
}

msl::ModelProgram extract_model(const std::string& response,
                                int num_features) {
  std::string cleaned = strip_think_blocks(response);

  std::vector<msl::ModelProgram> found;
  std::optional<ParseError> first_parse_error;
  std::optional<HeaderError> first_header_error;
  bool saw_candidate = false;

  for (const std::string& region : candidate_regions(cleaned)) {
    std::size_t pos = 0;
    while ((pos = region.find("params", pos)) != std::string::npos) {
      bool boundary_left = pos == 0 || !is_word_char(region[pos - 1]);
      bool boundary_right =
          pos + 6 >= region.size() || !is_word_char(region[pos + 6]);
      if (!boundary_left || !boundary_right ||
          !looks_like_header(region, pos)) {
        pos += 6;
        continue;
      }
      saw_candidate = true;
      std::size_t consumed = 0;
      try {
        msl::ModelProgram prog = msl::parse_prefix(region, pos, consumed);
        bool duplicate = false;
        for (const auto& existing : found)
          if (msl::structurally_equal(existing, prog)) duplicate = true;
        if (!duplicate) found.push_back(std::move(prog));
        pos += consumed;
      } catch (const HeaderError& e) {
        if (!first_header_error) first_header_error = e;
        pos += 6;
      } catch (const ParseError& e) {
        if (!first_parse_error) first_parse_error = e;
        pos += 6;
      } catch (const ValidationError&) {
        if (!first_parse_error)
          first_parse_error = ParseError(
              "program references parameters beyond its declared count", 0, 0);
        pos += 6;
      }
    }
  }

  if (found.empty()) {
    if (first_parse_error) throw *first_parse_error;
    if (first_header_error) throw *first_header_error;
    if (saw_candidate)
      throw NoProgramFound("response mentions 'params' but no program parses");
    throw NoProgramFound("response contains no model program");
  }
  if (found.size() > 1)
    throw MultiplePrograms("response contains " +
                           std::to_string(found.size()) +
                           " distinct model programs");

  // Typecheck before accepting; TypeError propagates to the caller.
  msl::typecheck(found.front(), num_features);
  return std::move(found.front());
}

ScriptedReviser::ScriptedReviser(const std::string& script_dir,
                                 int num_features)
    : num_features_(num_features) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(script_dir, ec))
    throw IoError("script directory not found: " + script_dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(script_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".msl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    entries_.push_back(ss.str());
  }
  if (entries_.empty())
    throw ValidationError("script directory " + script_dir +
                          " contains no .msl files");
}

RevisionOutcome ScriptedReviser::revise(const PromptBundle& prompt) {
  (void)prompt;  // recorded by the engine; content is ignored by the script
  std::size_t index = std::min(cursor_, entries_.size() - 1);
  if (cursor_ < entries_.size()) ++cursor_;

  RevisionOutcome outcome;
  outcome.raw_response = entries_[index];
  outcome.attempts = 1;
  try {
    outcome.program = extract_model(entries_[index], num_features_);
    outcome.status = RevisionStatus::accepted;
  } catch (const Error&) {
    outcome.status = RevisionStatus::parse_failed_exhausted;
  }
  return outcome;
}

namespace {

struct UrlParts {
  std::string base;  // scheme://host[:port]
  std::string path;  // defaults to the chat-completions path
};

UrlParts split_url(const std::string& url) {
  UrlParts parts;
  std::size_t scheme = url.find("://");
  std::size_t path_start =
      scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
  if (path_start == std::string::npos) {
    parts.base = url;
    parts.path = "/v1/chat/completions";
  } else {
    parts.base = url.substr(0, path_start);
    parts.path = url.substr(path_start);
  }
  return parts;
}

}  // namespace

HttpReviser::HttpReviser(const ReviserConfig& config, int num_features)
    : config_(config), num_features_(num_features) {
  validate(config_);
}

RevisionOutcome HttpReviser::revise(const PromptBundle& prompt) {
  UrlParts url = split_url(config_.endpoint_url);
  httplib::Client client(url.base);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);

  httplib::Headers headers;
  if (const char* key = std::getenv("ASMR_API_KEY"))
    headers.emplace("Authorization", std::string("Bearer ") + key);

  nlohmann::json request;
  request["model"] = config_.model_name;
  auto& messages = request["messages"] = nlohmann::json::array();
  if (prompt.system_text)
    messages.push_back({{"role", "system"}, {"content", *prompt.system_text}});
  messages.push_back({{"role", "user"}, {"content", prompt.user_text}});
  request["temperature"] = config_.temperature;
  request["top_p"] = config_.top_p;
  const std::string body = request.dump();

  RevisionOutcome outcome;
  RevisionStatus last_failure = RevisionStatus::endpoint_error;

  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    ++outcome.attempts;
    httplib::Result result =
        client.Post(url.path, headers, body, "application/json");
    if (!result) {
      last_failure = RevisionStatus::endpoint_error;
      outcome.raw_response =
          "transport error: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status != 200) {
      last_failure = RevisionStatus::endpoint_error;
      outcome.raw_response =
          "HTTP " + std::to_string(result->status) + ": " + result->body;
      continue;
    }

    std::string content;
    try {
      nlohmann::json reply = nlohmann::json::parse(result->body);
      content = reply.at("choices").at(0).at("message").at("content")
                    .get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      last_failure = RevisionStatus::endpoint_error;
      outcome.raw_response =
          "malformed endpoint response: " + std::string(e.what());
      continue;
    }

    outcome.raw_response = content;
    try {
      outcome.program = extract_model(content, num_features_);
      outcome.status = RevisionStatus::accepted;
      return outcome;
    } catch (const Error&) {
      last_failure = RevisionStatus::parse_failed_exhausted;
    }
  }

  outcome.status = last_failure;
  return outcome;
}

std::unique_ptr<Reviser> make_reviser(const ReviserConfig& config,
                                      int num_features) {
  validate(config);
  if (config.mode == ReviserMode::scripted)
    return std::make_unique<ScriptedReviser>(config.script_id, num_features);
  return std::make_unique<HttpReviser>(config, num_features);
}

}  // namespace asmr
