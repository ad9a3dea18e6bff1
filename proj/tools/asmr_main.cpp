#include <cstdio>
#include <map>
#include <set>
#include <string_view>
#include <type_traits>
#include <utility>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "asmr/engine.hpp"
#include "asmr/errors.hpp"
#include "asmr/msl/parse.hpp"
#include "asmr/msl/print.hpp"
#include "asmr/msl/typecheck.hpp"
#include "asmr/synth.hpp"
#include "asmr/text.hpp"

namespace {

using namespace asmr;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accepts a baseline name (wadd, ttb, eqw), "adaptive" for the two-parameter
// adaptive-validity model, or a path to an .msl file.
msl::ModelProgram load_model_arg(const std::string& arg) {
  if (arg == "wadd" || arg == "ttb" || arg == "eqw")
    return msl::baseline(msl::model_class_from_name(arg));
  if (arg == "adaptive") return msl::adaptive_validity_model();
  return msl::parse(read_text_file(arg));
}

TrialFormat format_from_name(const std::string& name) {
  if (name == "csv") return TrialFormat::csv;
  if (name == "json") return TrialFormat::json;
  throw ValidationError("unknown trials format '" + name + "'");
}

struct CommonDataArgs {
  std::string trials_path;
  std::string format = "csv";
};

// TOML-subset config reader: `key = value` lines with quoted strings, plain
// numbers or booleans; '#' comments; [section] headers are ignored. Keys are
// the long flag names without the leading dashes.
std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::map<std::string, std::string> values;
  std::istringstream in(read_text_file(path));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty() || view.front() == '#' || view.front() == '[') continue;
    std::size_t eq = view.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    std::string key(trim(view.substr(0, eq)));
    std::string_view raw = trim(view.substr(eq + 1));
    std::size_t comment = std::string_view::npos;
    if (!raw.empty() && raw.front() != '"' && raw.front() != '\'')
      comment = raw.find('#');
    if (comment != std::string_view::npos) raw = trim(raw.substr(0, comment));
    std::string value(raw);
    if (value.size() >= 2 &&
        ((value.front() == '"' && value.back() == '"') ||
         (value.front() == '\'' && value.back() == '\'')))
      value = value.substr(1, value.size() - 2);
    if (key.empty() || value.empty())
      throw ValidationError(path + ":" + std::to_string(line_no) +
                            ": expected 'key = value'");
    values[key] = value;
  }
  return values;
}

class ConfigApplier {
 public:
  explicit ConfigApplier(std::map<std::string, std::string> values)
      : values_(std::move(values)) {}

  template <typename T>
  void set(const std::string& key, T& target) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    std::istringstream ss(it->second);
    T parsed;
    if constexpr (std::is_same_v<T, std::string>) {
      parsed = it->second;
    } else if constexpr (std::is_same_v<T, bool>) {
      parsed = it->second == "true" || it->second == "1";
    } else {
      ss >> parsed;
      if (ss.fail() || !ss.eof())
        throw ValidationError("config key '" + key + "': cannot parse '" +
                              it->second + "'");
    }
    target = parsed;
    consumed_.insert(key);
  }

  void finish(const std::string& path) const {
    for (const auto& [key, value] : values_) {
      (void)value;
      if (!consumed_.count(key))
        throw ValidationError(path + ": unknown config key '" + key + "'");
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

void add_data_options(CLI::App* cmd, CommonDataArgs& args) {
  cmd->add_option("--trials", args.trials_path, "Trials file")->required();
  cmd->add_option("--format", args.format, "Trials file format (csv|json)")
      ->check(CLI::IsMember({"csv", "json"}));
}

void add_reviser_options(CLI::App* cmd, ReviserConfig& reviser,
                         std::string& mode) {
  cmd->add_option("--reviser", mode, "Reviser mode (llm|scripted)")
      ->check(CLI::IsMember({"llm", "scripted"}));
  cmd->add_option("--script", reviser.script_id,
                  "Directory of .msl files for the scripted reviser");
  cmd->add_option("--endpoint", reviser.endpoint_url,
                  "Chat-completion endpoint base URL");
  cmd->add_option("--model-name", reviser.model_name,
                  "Model name sent to the endpoint");
  cmd->add_option("--temperature", reviser.temperature, "Sampling temperature")
      ->capture_default_str();
  cmd->add_option("--top-p", reviser.top_p, "Nucleus sampling cutoff")
      ->capture_default_str();
  cmd->add_option("--max-retries", reviser.max_retries,
                  "Extra attempts after an invalid response")
      ->capture_default_str();
  cmd->add_option("--timeout", reviser.timeout_seconds,
                  "Endpoint timeout in seconds")
      ->capture_default_str();
  cmd->add_option("--prompt-points", reviser.max_points_in_prompt,
                  "Maximum regret points rendered into the prompt")
      ->capture_default_str();
}

int cmd_fit(const CommonDataArgs& data, const std::string& model_arg,
            std::uint64_t seed, int restarts) {
  TrialSet trials = load_trials(data.trials_path, format_from_name(data.format));
  msl::ModelProgram prog = load_model_arg(model_arg);
  msl::TypedProgram typed = msl::typecheck(prog, trials.num_features);
  FitOptions options;
  options.restarts = restarts;
  auto fits = fit_all(typed, split_by_subject(trials), seed, options);

  double mean = 0.0;
  for (const auto& fr : fits) {
    std::cout << fr.subject_id << "  aic=" << fmt_double(fr.aic)
              << "  total_nll=" << fmt_double(fr.total_nll) << "  params=[";
    for (std::size_t i = 0; i < fr.params_hat.size(); ++i)
      std::cout << (i ? ", " : "") << fmt_double(fr.params_hat[i]);
    std::cout << "]\n";
    mean += fr.aic;
  }
  mean /= static_cast<double>(fits.size());
  std::cout << "mean_aic=" << fmt_double(mean) << "\n";
  return 0;
}

int cmd_regret(const CommonDataArgs& data, const std::string& reference_path,
               const std::string& model_arg, double threshold,
               std::uint64_t seed, int restarts, const std::string& out_path) {
  TrialSet trials = load_trials(data.trials_path, format_from_name(data.format));
  ReferenceLikelihoods reference = load_reference(reference_path, trials);
  msl::ModelProgram prog = load_model_arg(model_arg);
  msl::TypedProgram typed = msl::typecheck(prog, trials.num_features);
  FitOptions options;
  options.restarts = restarts;
  auto fits = fit_all(typed, split_by_subject(trials), seed, options);
  RegretSet regret = compute_regret(fits, reference, trials, threshold);

  std::cout << "subject_id,trial_index,delta,model_nll,reference_nll,choice\n";
  for (const auto& p : regret.points)
    std::cout << p.subject_id << ',' << p.trial_index << ','
              << fmt_double(p.delta) << ',' << fmt_double(p.model_nll) << ','
              << fmt_double(p.reference_nll) << ','
              << choice_letter(p.human_choice) << '\n';
  std::cerr << regret.size() << " regret points at threshold "
            << fmt_double(threshold) << "\n";
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + out_path);
    out << to_json(regret).dump(2) << "\n";
  }
  return 0;
}

int cmd_synth(const std::string& out_trials, const std::string& out_reference,
              int subjects, int trials_per_subject, std::uint64_t seed,
              const std::string& model_arg, const std::string& params_csv,
              bool allow_identical, const std::string& format,
              const std::string& out_model) {
  GeneratorSpec spec = default_generator_spec();
  if (!model_arg.empty()) spec.true_model = load_model_arg(model_arg);
  if (!params_csv.empty()) {
    spec.true_params.clear();
    for (const auto& field : split(params_csv, ',')) {
      double v = 0.0;
      if (!parse_double(trim(field), v))
        throw ValidationError("cannot parse --params value '" + field + "'");
      spec.true_params.push_back(v);
    }
  }
  spec.num_subjects = subjects;
  spec.trials_per_subject = trials_per_subject;
  spec.seed = seed;
  spec.exclude_identical_options = !allow_identical;

  auto [trials, reference] = generate(spec);
  save_trials(trials, out_trials, format_from_name(format));
  save_reference(reference, out_reference);
  if (!out_model.empty()) {
    std::ofstream out(out_model, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + out_model);
    out << msl::print(spec.true_model);
  }
  std::cerr << "wrote " << trials.records.size() << " trials for " << subjects
            << " subjects\n";
  return 0;
}

int cmd_report(const std::string& log_path, const std::string& out_dir) {
  auto entries = parse_run_log(log_path);
  if (entries.empty())
    throw ValidationError("run log " + log_path + " has no iteration records");
  write_report_files(out_dir, entries);
  std::cerr << "aggregated " << entries.size() << " records into " << out_dir
            << "\n";
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"Regret-guided discovery loop for interpretable "
               "multi-attribute choice models"};
  app.require_subcommand(1);

  // fit ----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand(
      "fit", "Fit one model to trials and print per-subject AIC");
  CommonDataArgs fit_data;
  std::string fit_model;
  std::uint64_t fit_seed = 0;
  int fit_restarts = 10;
  add_data_options(fit_cmd, fit_data);
  fit_cmd->add_option("--model", fit_model,
                      "Model: wadd|ttb|eqw|adaptive or an .msl file")
      ->required();
  fit_cmd->add_option("--seed", fit_seed, "Optimizer seed")
      ->capture_default_str();
  fit_cmd->add_option("--restarts", fit_restarts, "Multi-start count")
      ->capture_default_str();

  // regret -------------------------------------------------------------
  auto* regret_cmd = app.add_subcommand(
      "regret", "Fit a model and print the regret set against the reference");
  CommonDataArgs regret_data;
  std::string regret_reference, regret_model, regret_out;
  double regret_threshold = 0.05;
  std::uint64_t regret_seed = 0;
  int regret_restarts = 10;
  add_data_options(regret_cmd, regret_data);
  regret_cmd->add_option("--reference", regret_reference,
                         "Reference likelihood CSV")->required();
  regret_cmd->add_option("--model", regret_model,
                         "Model: wadd|ttb|eqw|adaptive or an .msl file")
      ->required();
  regret_cmd->add_option("--threshold", regret_threshold,
                         "Regret threshold delta")
      ->capture_default_str();
  regret_cmd->add_option("--seed", regret_seed, "Optimizer seed")
      ->capture_default_str();
  regret_cmd->add_option("--restarts", regret_restarts, "Multi-start count")
      ->capture_default_str();
  regret_cmd->add_option("--out", regret_out, "Write the regret set as JSON");

  // run / simulate -----------------------------------------------------
  RunConfig run_config;
  std::string run_class = "eqw";
  std::string run_mode = "scripted";
  std::string run_format = "csv";
  std::string run_policy = "always_accept";
  std::string config_path;
  int run_sim_index = 0;

  // The config file seeds the defaults before parsing, so explicit flags
  // always win. Applied only for run/simulate, which own a RunConfig.
  auto apply_config_file = [&](const std::string& path) {
    ConfigApplier config(parse_config_file(path));
    config.set("trials", run_config.trials_path);
    config.set("format", run_format);
    config.set("reference", run_config.reference_path);
    config.set("iterations", run_config.iterations);
    config.set("threshold", run_config.threshold);
    config.set("seed", run_config.seed);
    config.set("restarts", run_config.fit.restarts);
    config.set("policy", run_policy);
    config.set("out", run_config.output_dir);
    config.set("simulations", run_config.simulations_per_class);
    config.set("model-class", run_class);
    config.set("simulation-index", run_sim_index);
    config.set("reviser", run_mode);
    config.set("script", run_config.reviser.script_id);
    config.set("endpoint", run_config.reviser.endpoint_url);
    config.set("model-name", run_config.reviser.model_name);
    config.set("temperature", run_config.reviser.temperature);
    config.set("top-p", run_config.reviser.top_p);
    config.set("max-retries", run_config.reviser.max_retries);
    config.set("timeout", run_config.reviser.timeout_seconds);
    config.set("prompt-points", run_config.reviser.max_points_in_prompt);
    config.finish(path);
  };

  auto configure_engine_cmd = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path,
                    "Config file with any of this subcommand's options");
    cmd->add_option("--trials", run_config.trials_path, "Trials file");
    cmd->add_option("--format", run_format, "Trials file format (csv|json)")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--reference", run_config.reference_path,
                    "Reference likelihood CSV");
    cmd->add_option("--iterations", run_config.iterations,
                    "Revision iterations per simulation")
        ->capture_default_str();
    cmd->add_option("--threshold", run_config.threshold,
                    "Regret threshold delta")
        ->capture_default_str();
    cmd->add_option("--seed", run_config.seed, "Experiment seed")
        ->capture_default_str();
    cmd->add_option("--restarts", run_config.fit.restarts,
                    "Optimizer multi-start count")
        ->capture_default_str();
    cmd->add_option("--policy", run_policy,
                    "Acceptance policy (always_accept|keep_best)")
        ->check(CLI::IsMember({"always_accept", "keep_best"}));
    cmd->add_option("--out", run_config.output_dir, "Output directory");
    add_reviser_options(cmd, run_config.reviser, run_mode);
  };

  auto* run_cmd =
      app.add_subcommand("run", "Run one simulation from a class baseline");
  configure_engine_cmd(run_cmd);
  run_cmd->add_option("--model-class", run_class,
                      "Starting baseline (wadd|ttb|eqw)")
      ->check(CLI::IsMember({"wadd", "ttb", "eqw"}))
      ->capture_default_str();
  run_cmd->add_option("--simulation-index", run_sim_index,
                      "Index used for seed derivation")
      ->capture_default_str();

  auto* sim_cmd = app.add_subcommand(
      "simulate", "Run the full grid: every class x simulations");
  configure_engine_cmd(sim_cmd);
  sim_cmd->add_option("--simulations", run_config.simulations_per_class,
                      "Simulations per model class")
      ->capture_default_str();

  // synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand(
      "synth", "Generate synthetic trials plus an oracle reference cache");
  std::string synth_trials, synth_reference, synth_model, synth_params;
  std::string synth_format = "csv", synth_out_model;
  int synth_subjects = 30, synth_trials_per_subject = 96;
  std::uint64_t synth_seed = 0;
  bool synth_allow_identical = false;
  synth_cmd->add_option("--out-trials", synth_trials, "Trials output path")
      ->required();
  synth_cmd->add_option("--out-reference", synth_reference,
                        "Reference cache output path")->required();
  synth_cmd->add_option("--subjects", synth_subjects, "Number of subjects")
      ->capture_default_str();
  synth_cmd->add_option("--trials-per-subject", synth_trials_per_subject,
                        "Trials per subject")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed")
      ->capture_default_str();
  synth_cmd->add_option("--model", synth_model,
                        "Ground-truth model (default: adaptive)");
  synth_cmd->add_option("--params", synth_params,
                        "Comma-separated true parameters (default: 1.5,3)");
  synth_cmd->add_flag("--allow-identical", synth_allow_identical,
                      "Keep trials where both options are identical");
  synth_cmd->add_option("--format", synth_format,
                        "Trials output format (csv|json)")
      ->check(CLI::IsMember({"csv", "json"}));
  synth_cmd->add_option("--out-model", synth_out_model,
                        "Also write the ground-truth model as .msl");

  // report ---------------------------------------------------------------
  auto* report_cmd = app.add_subcommand(
      "report", "Re-aggregate summary files from an existing run log");
  std::string report_log, report_out;
  report_cmd->add_option("--log", report_log, "run_log.jsonl path")
      ->required();
  report_cmd->add_option("--out", report_out, "Output directory")->required();

  // Seed run/simulate defaults from --config before parsing so that
  // explicitly passed flags override file values.
  for (int i = 1; i < argc; ++i) {
    std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      apply_config_file(argv[i + 1]);
      break;
    }
    if (arg.rfind("--config=", 0) == 0) {
      apply_config_file(std::string(arg.substr(9)));
      break;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  if (*fit_cmd) return cmd_fit(fit_data, fit_model, fit_seed, fit_restarts);
  if (*regret_cmd)
    return cmd_regret(regret_data, regret_reference, regret_model,
                      regret_threshold, regret_seed, regret_restarts,
                      regret_out);
  if (*synth_cmd)
    return cmd_synth(synth_trials, synth_reference, synth_subjects,
                     synth_trials_per_subject, synth_seed, synth_model,
                     synth_params, synth_allow_identical, synth_format,
                     synth_out_model);
  if (*report_cmd) return cmd_report(report_log, report_out);

  for (const auto& [flag, value] :
       {std::pair<const char*, const std::string*>{"--trials",
                                                   &run_config.trials_path},
        {"--reference", &run_config.reference_path},
        {"--out", &run_config.output_dir}})
    if (value->empty())
      throw ValidationError(std::string(flag) +
                            " is required (flag or config file)");
  run_config.trials_format = format_from_name(run_format);
  run_config.acceptance_policy = acceptance_policy_from_name(run_policy);
  run_config.reviser.mode =
      run_mode == "llm" ? ReviserMode::llm : ReviserMode::scripted;

  if (*run_cmd) {
    TrialSet trials =
        load_trials(run_config.trials_path, run_config.trials_format);
    ReferenceLikelihoods reference =
        load_reference(run_config.reference_path, trials);
    run_config.simulations_per_class = 1;
    SimulationResult sim =
        run_simulation(run_config, msl::model_class_from_name(run_class),
                       run_sim_index, trials, reference);
    ExperimentReport report;
    report.simulations.push_back(std::move(sim));
    write_experiment_outputs(run_config, report);
    const auto& records = report.simulations.front().records;
    std::cerr << "simulation finished: " << records.size() << " records, "
              << "final mean AIC "
              << fmt_double(report.simulations.front().final_mean_aic) << "\n";
    return 0;
  }

  // simulate
  ExperimentReport report = run_experiment(run_config);
  std::cerr << "experiment finished: " << report.simulations.size()
            << " simulations written to " << run_config.output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const OptimizerFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 2;
  }
}
