#ifndef ASMR_REVISER_HPP_
#define ASMR_REVISER_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "asmr/msl/ast.hpp"
#include "asmr/regret.hpp"

namespace asmr {

struct PromptBundle {
  std::optional<std::string> system_text;  // none by default
  std::string user_text;
  int rendered_points = 0;
};

enum class ReviserMode { llm, scripted };

struct ReviserConfig {
  ReviserMode mode = ReviserMode::scripted;
  std::string endpoint_url;         // e.g. http://127.0.0.1:8000
  std::string model_name;
  double temperature = 0.6;
  double top_p = 0.95;
  int max_retries = 2;
  int timeout_seconds = 120;
  std::string script_id;            // scripted mode: directory of .msl files
  int max_points_in_prompt = 200;   // rendering cap, top delta first
  bool multi_proposal = false;      // reserved; single-proposal prompting only
};

void validate(const ReviserConfig& config);

enum class RevisionStatus { accepted, parse_failed_exhausted, endpoint_error };

const char* revision_status_name(RevisionStatus s);

struct RevisionOutcome {
  RevisionStatus status = RevisionStatus::endpoint_error;
  std::optional<msl::ModelProgram> program;  // present iff accepted
  std::string raw_response;
  int attempts = 0;
};

// Instantiates the revision prompt: experiment description, current model
// source plus a note on the modeling language, up to `cap` regret points
// (top delta first), and the answer-format instructions. Throws
// EmptyRegretSet when there is nothing to revise.
PromptBundle build_prompt(const msl::ModelProgram& current_model,
                          const RegretSet& regret, int cap);

// Pulls the unique model program out of a chat response, ignoring reasoning
// preambles and code fences, then parses and typechecks it. Throws
// NoProgramFound, MultiplePrograms, or forwards ParseError/TypeError.
msl::ModelProgram extract_model(const std::string& response, int num_features);

class Reviser {
 public:
  virtual ~Reviser() = default;
  virtual RevisionOutcome revise(const PromptBundle& prompt) = 0;
};

// Deterministic stand-in for the language model. The script directory holds
// .msl files sorted by filename: the first is the starting model of the
// trajectory, each call returns the next entry (clamped at the last), run
// through the same extraction/validation path as endpoint responses.
class ScriptedReviser : public Reviser {
 public:
  ScriptedReviser(const std::string& script_dir, int num_features);
  RevisionOutcome revise(const PromptBundle& prompt) override;

 private:
  std::vector<std::string> entries_;
  std::size_t cursor_ = 1;
  int num_features_;
};

// OpenAI-compatible chat-completions client. Retries both transport/HTTP
// failures and invalid programs by re-sampling the same prompt, up to
// max_retries extra attempts. Reads the bearer token from ASMR_API_KEY.
class HttpReviser : public Reviser {
 public:
  HttpReviser(const ReviserConfig& config, int num_features);
  RevisionOutcome revise(const PromptBundle& prompt) override;

 private:
  ReviserConfig config_;
  int num_features_;
};

std::unique_ptr<Reviser> make_reviser(const ReviserConfig& config,
                                      int num_features);

}  // namespace asmr

#endif  // ASMR_REVISER_HPP_
