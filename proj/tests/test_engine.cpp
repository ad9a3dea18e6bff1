#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "asmr/engine.hpp"
#include "asmr/errors.hpp"
#include "asmr/msl/print.hpp"
#include "asmr/msl/typecheck.hpp"
#include "asmr/rng.hpp"
#include "asmr/synth.hpp"
#include "support/tempdir.hpp"

using namespace asmr;
using asmr::testing::TempDir;
using asmr::testing::read_file;
using asmr::testing::write_file;

namespace {

struct EngineFixture {
  TrialSet trials;
  ReferenceLikelihoods reference;
  TempDir tmp{"engine"};
  std::string script_dir;

  // Data generated by the adaptive-validity model; the script walks
  // eqw -> wadd -> adaptive.
  explicit EngineFixture(int subjects = 4, std::uint64_t seed = 7) {
    GeneratorSpec spec = default_generator_spec();
    spec.num_subjects = subjects;
    spec.trials_per_subject = 48;
    spec.seed = seed;
    auto generated = generate(spec);
    trials = std::move(generated.first);
    reference = std::move(generated.second);

    script_dir = tmp.subdir("script");
    write_file(script_dir + "/00.msl",
               msl::print(msl::baseline(msl::ModelClass::eqw)));
    write_file(script_dir + "/01.msl",
               msl::print(msl::baseline(msl::ModelClass::wadd)));
    write_file(script_dir + "/02.msl",
               msl::print(msl::adaptive_validity_model()));
  }

  RunConfig config(int iterations = 3) const {
    RunConfig cfg;
    cfg.iterations = iterations;
    cfg.simulations_per_class = 1;
    cfg.threshold = 0.05;
    cfg.seed = 99;
    cfg.fit.restarts = 6;
    cfg.reviser.mode = ReviserMode::scripted;
    cfg.reviser.script_id = script_dir;
    return cfg;
  }
};

nlohmann::json simulation_json(const SimulationResult& sim) {
  nlohmann::json lines = nlohmann::json::array();
  for (const auto& rec : sim.records)
    lines.push_back(
        iteration_to_json(model_class_name(sim.model_class),
                          sim.simulation_index, rec));
  return lines;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("a simulation produces the initial fit record plus one per iteration") {
  EngineFixture fx;
  RunConfig cfg = fx.config(5);
  SimulationResult sim = run_simulation(cfg, msl::ModelClass::eqw, 0,
                                        fx.trials, fx.reference);
  REQUIRE(sim.records.size() == 6);  // initial fit + 5 iterations
  for (int i = 0; i < 6; ++i)
    CHECK(sim.records[i].iteration_index == i);
  // every record but the last carries a revision
  for (int i = 0; i < 5; ++i) CHECK(sim.records[i].revision.has_value());
  CHECK(!sim.records[5].revision.has_value());
  CHECK(sim.final_mean_aic == sim.records.back().mean_aic);
}

TEST_CASE("stepping from eqw to wadd on adaptive data lowers the mean AIC") {
  EngineFixture fx(5, 21);
  RunConfig cfg = fx.config(2);
  SimulationResult sim = run_simulation(cfg, msl::ModelClass::eqw, 0,
                                        fx.trials, fx.reference);
  REQUIRE(sim.records.size() >= 3);
  // eqw -> wadd strictly improves on data that upweights the first expert
  CHECK(sim.records[1].mean_aic < sim.records[0].mean_aic);
  // wadd -> adaptive family improves again (one extra parameter, nested fit)
  CHECK(sim.records[2].mean_aic < sim.records[0].mean_aic);
}

TEST_CASE("revision failures keep the current model and are recorded") {
  EngineFixture fx;
  std::string bad_dir = fx.tmp.subdir("bad_script");
  write_file(bad_dir + "/00.msl",
             msl::print(msl::baseline(msl::ModelClass::eqw)));
  write_file(bad_dir + "/01.msl", "no program here\n");
  RunConfig cfg = fx.config(1);
  cfg.reviser.script_id = bad_dir;

  SimulationResult sim = run_simulation(cfg, msl::ModelClass::eqw, 0,
                                        fx.trials, fx.reference);
  REQUIRE(sim.records.size() == 2);
  REQUIRE(sim.records[0].revision.has_value());
  CHECK(sim.records[0].revision->status ==
        RevisionStatus::parse_failed_exhausted);
  CHECK(!sim.records[0].revision->installed);
  CHECK(sim.records[1].model_source == sim.records[0].model_source);
}

TEST_CASE("a perfect model converges immediately") {
  EngineFixture fx;
  // Reference := the eqw model's own fitted per-trial NLLs.
  msl::TypedProgram typed =
      msl::typecheck(msl::baseline(msl::ModelClass::eqw), 4);
  RunConfig cfg = fx.config(4);
  auto subjects = split_by_subject(fx.trials);
  auto fits = fit_all(typed, subjects,
                      derive_seed(derive_seed(cfg.seed, "eqw", 0),
                                  "iteration", 0),
                      cfg.fit);
  ReferenceLikelihoods mirror;
  for (const auto& fr : fits)
    for (int t = 0; t < static_cast<int>(fr.per_trial_nll.size()); ++t)
      mirror.entries[TrialKey{fr.subject_id, t}] = fr.per_trial_nll[t];

  SimulationResult sim =
      run_simulation(cfg, msl::ModelClass::eqw, 0, fx.trials, mirror);
  CHECK(sim.converged);
  REQUIRE(sim.records.size() == 1);
  CHECK(sim.records[0].regret_size == 0);
  CHECK(!sim.records[0].revision.has_value());
}

TEST_CASE("identical configurations replay identically") {
  EngineFixture fx;
  RunConfig cfg = fx.config(2);
  SimulationResult a = run_simulation(cfg, msl::ModelClass::ttb, 3,
                                      fx.trials, fx.reference);
  SimulationResult b = run_simulation(cfg, msl::ModelClass::ttb, 3,
                                      fx.trials, fx.reference);
  CHECK(simulation_json(a).dump() == simulation_json(b).dump());
}

TEST_CASE("keep_best revises from the best fitted model") {
  EngineFixture fx(4, 33);
  // Script: start, a deliberately poor constant model, then garbage. Under
  // keep_best the failed third revision falls back to the best model (the
  // starting eqw fit), not to the poor constant.
  std::string dir = fx.tmp.subdir("keepbest");
  write_file(dir + "/00.msl", msl::print(msl::baseline(msl::ModelClass::eqw)));
  write_file(dir + "/01.msl", "params 0;\nmodel = sum(A) * 0 + 0.2;\n");
  write_file(dir + "/02.msl", "garbage\n");

  RunConfig cfg = fx.config(2);
  cfg.reviser.script_id = dir;
  cfg.acceptance_policy = AcceptancePolicy::keep_best;
  SimulationResult sim = run_simulation(cfg, msl::ModelClass::eqw, 0,
                                        fx.trials, fx.reference);
  REQUIRE(sim.records.size() == 3);
  CHECK(sim.records[1].mean_aic > sim.records[0].mean_aic);  // poor constant
  CHECK(sim.records[2].model_source == sim.records[0].model_source);
  CHECK(sim.best_mean_aic ==
        std::min(sim.records[0].mean_aic, sim.records[2].mean_aic));

  // Under always_accept the same failure keeps the poor constant instead.
  cfg.acceptance_policy = AcceptancePolicy::always_accept;
  cfg.reviser.script_id = dir;
  SimulationResult always = run_simulation(cfg, msl::ModelClass::eqw, 0,
                                           fx.trials, fx.reference);
  REQUIRE(always.records.size() == 3);
  CHECK(always.records[2].model_source == always.records[1].model_source);
}

TEST_CASE("best mean AIC is the running minimum across records") {
  EngineFixture fx(3, 55);
  RunConfig cfg = fx.config(3);
  for (auto policy :
       {AcceptancePolicy::always_accept, AcceptancePolicy::keep_best}) {
    cfg.acceptance_policy = policy;
    SimulationResult sim = run_simulation(cfg, msl::ModelClass::ttb, 1,
                                          fx.trials, fx.reference);
    double running = std::numeric_limits<double>::infinity();
    for (const auto& rec : sim.records) running = std::min(running, rec.mean_aic);
    CHECK(sim.best_mean_aic == doctest::Approx(running).epsilon(1e-12));
  }
}

TEST_CASE("an experiment runs the full grid and writes its outputs") {
  EngineFixture fx(3, 11);
  RunConfig cfg = fx.config(2);
  cfg.simulations_per_class = 2;
  cfg.output_dir = fx.tmp.subdir("out");

  ExperimentReport report = run_experiment(cfg, fx.trials, fx.reference);
  CHECK(report.simulations.size() == 6);  // 3 classes x 2 simulations

  namespace fs = std::filesystem;
  CHECK(fs::exists(fs::path(cfg.output_dir) / "run_log.jsonl"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "summary.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "participants.csv"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "report.json"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "models" / "eqw_0_0.msl"));
  CHECK(fs::exists(fs::path(cfg.output_dir) / "models" / "wadd_1_2.msl"));

  auto entries = log_entries(report);
  CHECK(entries.size() == 6 * 3);  // every simulation has 3 records

  // the summary has one line per record plus a header
  std::string summary = read_file(cfg.output_dir + "/summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 19);

  // one participants row per subject plus a header
  std::string participants = read_file(cfg.output_dir + "/participants.csv");
  CHECK(std::count(participants.begin(), participants.end(), '\n') == 4);

  nlohmann::json agg = aggregate_report(entries);
  REQUIRE(agg["across_simulations"].size() == 3);
  for (const auto& band : agg["across_simulations"]) {
    CHECK(band["min"].get<double>() <= band["mean"].get<double>() + 1e-12);
    CHECK(band["mean"].get<double>() <= band["max"].get<double>() + 1e-12);
  }
  for (const auto& band : agg["across_participants"]) {
    CHECK(band["min"].get<double>() <= band["mean"].get<double>() + 1e-12);
    CHECK(band["mean"].get<double>() <= band["max"].get<double>() + 1e-12);
  }
}

TEST_CASE("experiment means equal the mean of simulation means") {
  EngineFixture fx(3, 45);
  RunConfig cfg = fx.config(2);
  cfg.simulations_per_class = 2;
  ExperimentReport report = run_experiment(cfg, fx.trials, fx.reference);
  auto entries = log_entries(report);
  nlohmann::json agg = aggregate_report(entries);

  for (int iter = 0; iter <= 2; ++iter) {
    double sum = 0.0;
    int n = 0;
    for (const auto& sim : report.simulations) {
      // carry the last record forward when a run converged early
      const IterationRecord* chosen = &sim.records.front();
      for (const auto& rec : sim.records)
        if (rec.iteration_index <= iter) chosen = &rec;
      sum += chosen->mean_aic;
      ++n;
    }
    double expected = sum / n;
    double got = agg["across_simulations"][iter]["mean"].get<double>();
    CHECK(std::fabs(got - expected) <= 1e-9);
  }
}

TEST_CASE("the run log is a faithful, audit-complete record") {
  EngineFixture fx(3, 66);
  RunConfig cfg = fx.config(2);
  cfg.simulations_per_class = 1;
  cfg.output_dir = fx.tmp.subdir("audit");
  ExperimentReport report = run_experiment(cfg, fx.trials, fx.reference);

  // every reviser call's prompt and raw response appear verbatim
  std::string log_text = read_file(cfg.output_dir + "/run_log.jsonl");
  for (const auto& sim : report.simulations)
    for (const auto& rec : sim.records)
      if (rec.revision) {
        CHECK(log_text.find(nlohmann::json(rec.revision->prompt_user_text)
                                .dump()) != std::string::npos);
        CHECK(log_text.find(nlohmann::json(rec.revision->raw_response)
                                .dump()) != std::string::npos);
      }

  // the parsed log reproduces the aggregation inputs exactly
  auto from_log = parse_run_log(cfg.output_dir + "/run_log.jsonl");
  auto from_memory = log_entries(report);
  REQUIRE(from_log.size() == from_memory.size());
  for (std::size_t i = 0; i < from_log.size(); ++i) {
    CHECK(from_log[i].model_class == from_memory[i].model_class);
    CHECK(from_log[i].iteration == from_memory[i].iteration);
    CHECK(from_log[i].mean_aic == from_memory[i].mean_aic);
    CHECK(from_log[i].subject_aic == from_memory[i].subject_aic);
  }

  // report regeneration from the log matches the direct aggregation
  CHECK(summary_csv(from_log) == summary_csv(from_memory));
  CHECK(participants_csv(from_log) == participants_csv(from_memory));
  CHECK(aggregate_report(from_log).dump() ==
        aggregate_report(from_memory).dump());
}

TEST_CASE("config validation rejects bad settings") {
  EngineFixture fx;
  RunConfig cfg = fx.config();
  cfg.iterations = 0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = fx.config();
  cfg.threshold = 0.0;
  CHECK_THROWS_AS(validate(cfg), ValidationError);
  cfg = fx.config();
  cfg.reviser.script_id.clear();
  CHECK_THROWS_AS(validate(cfg), ValidationError);
}

}  // TEST_SUITE
