#include "asmr/engine.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "asmr/errors.hpp"
#include "asmr/msl/parse.hpp"
#include "asmr/msl/print.hpp"
#include "asmr/msl/typecheck.hpp"
#include "asmr/rng.hpp"
#include "asmr/text.hpp"

namespace asmr {

namespace {

constexpr msl::ModelClass kClasses[] = {msl::ModelClass::wadd,
                                        msl::ModelClass::ttb,
                                        msl::ModelClass::eqw};

double mean_aic_of(const std::vector<FitResult>& fits) {
  double acc = 0.0;
  for (const auto& fr : fits) acc += fr.aic;
  return acc / static_cast<double>(fits.size());
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw IoError("write failure: " + path);
}

}  // namespace

const char* acceptance_policy_name(AcceptancePolicy p) {
  return p == AcceptancePolicy::always_accept ? "always_accept" : "keep_best";
}

AcceptancePolicy acceptance_policy_from_name(const std::string& name) {
  if (name == "always_accept") return AcceptancePolicy::always_accept;
  if (name == "keep_best") return AcceptancePolicy::keep_best;
  throw ValidationError("unknown acceptance policy '" + name + "'");
}

void validate(const RunConfig& config) {
  if (config.iterations < 1)
    throw ValidationError("iterations must be >= 1");
  if (config.simulations_per_class < 1)
    throw ValidationError("simulations_per_class must be >= 1");
  if (!(config.threshold > 0.0))
    throw ValidationError("threshold must be positive");
  if (config.fit.restarts < 1)
    throw ValidationError("fit restarts must be >= 1");
  validate(config.reviser);
}

SimulationResult run_simulation(const RunConfig& config,
                                msl::ModelClass model_class,
                                int simulation_index, const TrialSet& trials,
                                const ReferenceLikelihoods& reference) {
  validate(config);
  if (trials.records.empty())
    throw ValidationError("cannot run a simulation on an empty trial set");

  const std::vector<SubjectData> subjects = split_by_subject(trials);
  const std::uint64_t sim_seed = derive_seed(
      config.seed, model_class_name(model_class), simulation_index);
  std::unique_ptr<Reviser> reviser =
      make_reviser(config.reviser, trials.num_features);

  SimulationResult result;
  result.model_class = model_class;
  result.simulation_index = simulation_index;

  msl::ModelProgram current = msl::baseline(model_class);

  // Best fitted state so far; the keep_best policy revises from here.
  struct Scored {
    msl::ModelProgram model;
    RegretSet regret;
    double mean_aic = std::numeric_limits<double>::infinity();
  };
  Scored best;

  for (int iter = 0; iter <= config.iterations; ++iter) {
    auto started = std::chrono::steady_clock::now();

    msl::TypedProgram typed = msl::typecheck(current, trials.num_features);
    std::vector<FitResult> fits =
        fit_all(typed, subjects, derive_seed(sim_seed, "iteration", iter),
                config.fit);
    double mean_aic = mean_aic_of(fits);
    RegretSet regret =
        compute_regret(fits, reference, trials, config.threshold);

    IterationRecord rec;
    rec.iteration_index = iter;
    rec.model_source = msl::print(current);
    rec.mean_aic = mean_aic;
    rec.regret_size = static_cast<int>(regret.size());
    rec.fits = std::move(fits);

    if (mean_aic <= best.mean_aic)
      best = Scored{current, regret, mean_aic};

    if (regret.empty()) {
      result.converged = true;
      rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
      result.records.push_back(std::move(rec));
      break;
    }
    if (iter == config.iterations) {
      rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
      result.records.push_back(std::move(rec));
      break;
    }

    const bool from_best =
        config.acceptance_policy == AcceptancePolicy::keep_best;
    const msl::ModelProgram& base_model = from_best ? best.model : current;
    const RegretSet& base_regret = from_best ? best.regret : regret;

    PromptBundle prompt = build_prompt(base_model, base_regret,
                                       config.reviser.max_points_in_prompt);
    RevisionOutcome outcome = reviser->revise(prompt);

    RevisionRecord revision;
    revision.status = outcome.status;
    revision.attempts = outcome.attempts;
    revision.installed = outcome.program.has_value();
    revision.prompt_user_text = prompt.user_text;
    revision.raw_response = outcome.raw_response;
    rec.revision = std::move(revision);

    // Failed revisions leave the model unchanged and still consume the
    // iteration.
    current = outcome.program ? *outcome.program : base_model;

    rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - started)
                           .count();
    result.records.push_back(std::move(rec));
  }

  result.final_mean_aic = result.records.back().mean_aic;
  result.best_mean_aic = best.mean_aic;
  return result;
}

ExperimentReport run_experiment(const RunConfig& config,
                                const TrialSet& trials,
                                const ReferenceLikelihoods& reference) {
  validate(config);
  ExperimentReport report;
  for (msl::ModelClass model_class : kClasses)
    for (int sim = 0; sim < config.simulations_per_class; ++sim)
      report.simulations.push_back(
          run_simulation(config, model_class, sim, trials, reference));
  if (!config.output_dir.empty()) write_experiment_outputs(config, report);
  return report;
}

ExperimentReport run_experiment(const RunConfig& config) {
  TrialSet trials = load_trials(config.trials_path, config.trials_format);
  ReferenceLikelihoods reference =
      load_reference(config.reference_path, trials);
  return run_experiment(config, trials, reference);
}

nlohmann::json config_to_json(const RunConfig& config) {
  nlohmann::json doc;
  doc["iterations"] = config.iterations;
  doc["simulations_per_class"] = config.simulations_per_class;
  doc["threshold"] = config.threshold;
  doc["acceptance_policy"] = acceptance_policy_name(config.acceptance_policy);
  doc["seed"] = config.seed;
  doc["fit_restarts"] = config.fit.restarts;
  doc["trials_path"] = config.trials_path;
  doc["trials_format"] =
      config.trials_format == TrialFormat::csv ? "csv" : "json";
  doc["reference_path"] = config.reference_path;
  doc["output_dir"] = config.output_dir;
  nlohmann::json rev;
  rev["mode"] =
      config.reviser.mode == ReviserMode::llm ? "llm" : "scripted";
  rev["endpoint_url"] = config.reviser.endpoint_url;
  rev["model_name"] = config.reviser.model_name;
  rev["temperature"] = config.reviser.temperature;
  rev["top_p"] = config.reviser.top_p;
  rev["max_retries"] = config.reviser.max_retries;
  rev["timeout_seconds"] = config.reviser.timeout_seconds;
  rev["script_id"] = config.reviser.script_id;
  rev["max_points_in_prompt"] = config.reviser.max_points_in_prompt;
  doc["reviser"] = std::move(rev);
  return doc;
}

nlohmann::json iteration_to_json(const std::string& class_name,
                                 int simulation, const IterationRecord& rec) {
  nlohmann::json doc;
  doc["model_class"] = class_name;
  doc["simulation"] = simulation;
  doc["iteration"] = rec.iteration_index;
  doc["model_source"] = rec.model_source;
  doc["mean_aic"] = rec.mean_aic;
  doc["regret_size"] = rec.regret_size;
  auto& subjects = doc["subjects"] = nlohmann::json::array();
  for (const auto& fr : rec.fits) {
    nlohmann::json s;
    s["subject_id"] = fr.subject_id;
    s["aic"] = fr.aic;
    s["total_nll"] = fr.total_nll;
    s["params"] = fr.params_hat;
    s["converged"] = fr.optimizer_meta.converged;
    s["function_evals"] = fr.optimizer_meta.function_evals;
    subjects.push_back(std::move(s));
  }
  if (rec.revision) {
    nlohmann::json rev;
    rev["status"] = revision_status_name(rec.revision->status);
    rev["attempts"] = rec.revision->attempts;
    rev["installed"] = rec.revision->installed;
    rev["prompt"] = rec.revision->prompt_user_text;
    rev["response"] = rec.revision->raw_response;
    doc["revision"] = std::move(rev);
  }
  return doc;
}

std::vector<LogEntry> log_entries(const ExperimentReport& report) {
  std::vector<LogEntry> entries;
  for (const auto& sim : report.simulations) {
    for (const auto& rec : sim.records) {
      LogEntry entry;
      entry.model_class = model_class_name(sim.model_class);
      entry.simulation = sim.simulation_index;
      entry.iteration = rec.iteration_index;
      entry.model_source = rec.model_source;
      entry.mean_aic = rec.mean_aic;
      entry.regret_size = rec.regret_size;
      for (const auto& fr : rec.fits)
        entry.subject_aic.emplace_back(fr.subject_id, fr.aic);
      entries.push_back(std::move(entry));
    }
  }
  return entries;
}

std::vector<LogEntry> parse_run_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open run log: " + path);
  std::vector<LogEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("run log line " + std::to_string(line_no) + ": " +
                        e.what());
    }
    if (doc.contains("config")) continue;  // header echo
    LogEntry entry;
    entry.model_class = doc.at("model_class").get<std::string>();
    entry.simulation = doc.at("simulation").get<int>();
    entry.iteration = doc.at("iteration").get<int>();
    entry.model_source = doc.value("model_source", std::string());
    entry.mean_aic = doc.at("mean_aic").get<double>();
    entry.regret_size = doc.at("regret_size").get<int>();
    for (const auto& s : doc.at("subjects"))
      entry.subject_aic.emplace_back(s.at("subject_id").get<std::string>(),
                                     s.at("aic").get<double>());
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string summary_csv(const std::vector<LogEntry>& entries) {
  std::ostringstream out;
  out << "model_class,simulation,iteration,mean_aic,min_aic,max_aic,"
         "regret_size\n";
  for (const auto& e : entries) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [subject, aic] : e.subject_aic) {
      (void)subject;
      lo = std::min(lo, aic);
      hi = std::max(hi, aic);
    }
    out << e.model_class << ',' << e.simulation << ',' << e.iteration << ','
        << fmt_double(e.mean_aic) << ',' << fmt_double(lo) << ','
        << fmt_double(hi) << ',' << e.regret_size << '\n';
  }
  return out.str();
}

namespace {

// Groups entries by (class, simulation), ordered by iteration.
std::map<std::pair<std::string, int>, std::vector<const LogEntry*>>
group_runs(const std::vector<LogEntry>& entries) {
  std::map<std::pair<std::string, int>, std::vector<const LogEntry*>> runs;
  for (const auto& e : entries)
    runs[{e.model_class, e.simulation}].push_back(&e);
  for (auto& [key, run] : runs) {
    (void)key;
    std::sort(run.begin(), run.end(),
              [](const LogEntry* a, const LogEntry* b) {
                return a->iteration < b->iteration;
              });
  }
  return runs;
}

}  // namespace

std::string participants_csv(const std::vector<LogEntry>& entries) {
  auto runs = group_runs(entries);
  std::map<std::string, std::pair<double, double>> sums;  // first, last
  std::map<std::string, int> counts;
  for (const auto& [key, run] : runs) {
    (void)key;
    std::map<std::string, double> first, last;
    for (const auto& [subject, aic] : run.front()->subject_aic)
      first[subject] = aic;
    for (const auto& [subject, aic] : run.back()->subject_aic)
      last[subject] = aic;
    for (const auto& [subject, aic] : first) {
      sums[subject].first += aic;
      sums[subject].second += last.at(subject);
      counts[subject] += 1;
    }
  }
  std::ostringstream out;
  out << "subject_id,first_aic,last_aic\n";
  for (const auto& [subject, pair] : sums) {
    double n = counts.at(subject);
    out << subject << ',' << fmt_double(pair.first / n) << ','
        << fmt_double(pair.second / n) << '\n';
  }
  return out.str();
}

nlohmann::json aggregate_report(const std::vector<LogEntry>& entries) {
  auto runs = group_runs(entries);
  int max_iteration = 0;
  for (const auto& [key, run] : runs) {
    (void)key;
    max_iteration = std::max(max_iteration, run.back()->iteration);
  }

  nlohmann::json doc;
  doc["iterations"] = max_iteration;

  auto& across_sims = doc["across_simulations"] = nlohmann::json::array();
  auto& across_subjects = doc["across_participants"] = nlohmann::json::array();
  for (int iter = 0; iter <= max_iteration; ++iter) {
    double sim_sum = 0.0, sim_lo = 0.0, sim_hi = 0.0;
    int sim_n = 0;
    double subj_sum = 0.0, subj_lo = 0.0, subj_hi = 0.0;
    int subj_n = 0;
    for (const auto& [key, run] : runs) {
      (void)key;
      // Converged runs carry their final record forward.
      const LogEntry* e = run.front();
      for (const LogEntry* candidate : run)
        if (candidate->iteration <= iter) e = candidate;
      if (sim_n == 0) {
        sim_lo = sim_hi = e->mean_aic;
      } else {
        sim_lo = std::min(sim_lo, e->mean_aic);
        sim_hi = std::max(sim_hi, e->mean_aic);
      }
      sim_sum += e->mean_aic;
      ++sim_n;
      for (const auto& [subject, aic] : e->subject_aic) {
        (void)subject;
        if (subj_n == 0) {
          subj_lo = subj_hi = aic;
        } else {
          subj_lo = std::min(subj_lo, aic);
          subj_hi = std::max(subj_hi, aic);
        }
        subj_sum += aic;
        ++subj_n;
      }
    }
    across_sims.push_back({{"iteration", iter},
                           {"mean", sim_sum / sim_n},
                           {"min", sim_lo},
                           {"max", sim_hi}});
    across_subjects.push_back({{"iteration", iter},
                               {"mean", subj_sum / subj_n},
                               {"min", subj_lo},
                               {"max", subj_hi}});
  }

  const LogEntry* best = nullptr;
  for (const auto& e : entries)
    if (!best || e.mean_aic < best->mean_aic) best = &e;
  if (best) {
    doc["best_model"] = {{"model_class", best->model_class},
                         {"simulation", best->simulation},
                         {"iteration", best->iteration},
                         {"mean_aic", best->mean_aic},
                         {"model_source", best->model_source}};
  }
  return doc;
}

void write_report_files(const std::string& output_dir,
                        const std::vector<LogEntry>& entries) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  write_text_file((fs::path(output_dir) / "summary.csv").string(),
                  summary_csv(entries));
  write_text_file((fs::path(output_dir) / "participants.csv").string(),
                  participants_csv(entries));
  write_text_file((fs::path(output_dir) / "report.json").string(),
                  aggregate_report(entries).dump(2) + "\n");
}

void write_experiment_outputs(const RunConfig& config,
                              const ExperimentReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  fs::create_directories(fs::path(config.output_dir) / "models");

  std::ostringstream log;
  log << nlohmann::json({{"config", config_to_json(config)}}).dump() << '\n';
  for (const auto& sim : report.simulations) {
    const std::string class_name = model_class_name(sim.model_class);
    for (const auto& rec : sim.records) {
      log << iteration_to_json(class_name, sim.simulation_index, rec).dump()
          << '\n';
      std::string name = class_name + "_" +
                         std::to_string(sim.simulation_index) + "_" +
                         std::to_string(rec.iteration_index) + ".msl";
      write_text_file(
          (fs::path(config.output_dir) / "models" / name).string(),
          rec.model_source);
    }
  }
  write_text_file((fs::path(config.output_dir) / "run_log.jsonl").string(),
                  log.str());
  write_report_files(config.output_dir, log_entries(report));
}

}  // namespace asmr
