#ifndef ASMR_ENGINE_HPP_
#define ASMR_ENGINE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "asmr/data.hpp"
#include "asmr/fitting.hpp"
#include "asmr/msl/baselines.hpp"
#include "asmr/regret.hpp"
#include "asmr/reviser.hpp"

namespace asmr {

enum class AcceptancePolicy { always_accept, keep_best };

const char* acceptance_policy_name(AcceptancePolicy p);
AcceptancePolicy acceptance_policy_from_name(const std::string& name);

struct RunConfig {
  int iterations = 5;
  int simulations_per_class = 10;
  double threshold = 0.05;
  AcceptancePolicy acceptance_policy = AcceptancePolicy::always_accept;
  std::uint64_t seed = 0;
  ReviserConfig reviser;
  FitOptions fit;
  std::string trials_path;
  TrialFormat trials_format = TrialFormat::csv;
  std::string reference_path;
  std::string output_dir;
};

void validate(const RunConfig& config);

struct RevisionRecord {
  RevisionStatus status = RevisionStatus::endpoint_error;
  int attempts = 0;
  bool installed = false;  // proposal became the next round's model
  std::string prompt_user_text;
  std::string raw_response;
};

// One loop step: the fit/score/regret snapshot of the model entering the
// step, plus the revision that produced the next model (absent on the final
// fit-only record and on convergence). wall_time_ms stays in memory; the
// serialized run log is byte-reproducible and excludes it.
struct IterationRecord {
  int iteration_index = 0;
  std::string model_source;  // canonical print of the fitted model
  std::vector<FitResult> fits;
  double mean_aic = 0.0;
  int regret_size = 0;
  std::optional<RevisionRecord> revision;
  double wall_time_ms = 0.0;
};

// Records 0..iterations: revisions happen on records 0..iterations-1, the
// final record scores the last installed model. An empty regret set ends the
// run early with a converged, revision-free record.
struct SimulationResult {
  msl::ModelClass model_class = msl::ModelClass::wadd;
  int simulation_index = 0;
  std::vector<IterationRecord> records;
  double final_mean_aic = 0.0;
  double best_mean_aic = 0.0;
  bool converged = false;
};

SimulationResult run_simulation(const RunConfig& config,
                                msl::ModelClass model_class,
                                int simulation_index, const TrialSet& trials,
                                const ReferenceLikelihoods& reference);

struct ExperimentReport {
  std::vector<SimulationResult> simulations;  // class-major, then index
};

// 3 model classes x simulations_per_class runs. Writes run_log.jsonl,
// summary.csv, participants.csv, report.json and models/*.msl into
// output_dir when it is nonempty.
ExperimentReport run_experiment(const RunConfig& config,
                                const TrialSet& trials,
                                const ReferenceLikelihoods& reference);

// Loads the data named in the config, then runs as above.
ExperimentReport run_experiment(const RunConfig& config);

// Flat view of one run-log line; everything the aggregators need.
struct LogEntry {
  std::string model_class;
  int simulation = 0;
  int iteration = 0;
  std::string model_source;
  double mean_aic = 0.0;
  int regret_size = 0;
  std::vector<std::pair<std::string, double>> subject_aic;
};

nlohmann::json config_to_json(const RunConfig& config);
nlohmann::json iteration_to_json(const std::string& class_name,
                                 int simulation, const IterationRecord& rec);

std::vector<LogEntry> log_entries(const ExperimentReport& report);
std::vector<LogEntry> parse_run_log(const std::string& path);

// model_class,simulation,iteration,mean_aic,min_aic,max_aic,regret_size
// (min/max over the per-subject AICs of that iteration).
std::string summary_csv(const std::vector<LogEntry>& entries);

// subject_id,first_aic,last_aic averaged over every (class, simulation).
std::string participants_csv(const std::vector<LogEntry>& entries);

// Per-iteration AIC bands aggregated two ways (across simulation means and
// across pooled participants), plus the best discovered model. Converged
// simulations carry their last record forward so every iteration aggregates
// the same run count.
nlohmann::json aggregate_report(const std::vector<LogEntry>& entries);

void write_experiment_outputs(const RunConfig& config,
                              const ExperimentReport& report);
void write_report_files(const std::string& output_dir,
                        const std::vector<LogEntry>& entries);

}  // namespace asmr

#endif  // ASMR_ENGINE_HPP_
