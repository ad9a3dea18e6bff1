#ifndef ASMR_REGRET_HPP_
#define ASMR_REGRET_HPP_

#include <string>
#include <vector>

#include <json.hpp>

#include "asmr/data.hpp"
#include "asmr/fitting.hpp"

namespace asmr {

// A trial the fitted model explains worse than the reference predictor by at
// least the threshold (delta = model_nll - reference_nll).
struct RegretPoint {
  std::string subject_id;
  int trial_index = 0;
  std::vector<double> option_a;
  std::vector<double> option_b;
  Choice human_choice = Choice::A;
  double model_prob_of_choice = 0.0;  // exp(-model_nll)
  double model_nll = 0.0;
  double reference_nll = 0.0;
  double delta = 0.0;
};

// Exact filter {t : delta(t) >= threshold}, sorted by delta descending with
// ties broken by (subject_id, trial_index) ascending. No sampling or cap;
// prompt-size limits are applied later by the reviser.
struct RegretSet {
  std::vector<RegretPoint> points;
  double threshold = 0.0;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
};

RegretSet compute_regret(const std::vector<FitResult>& fits,
                         const ReferenceLikelihoods& reference,
                         const TrialSet& trials, double threshold);

nlohmann::json to_json(const RegretSet& regret);

}  // namespace asmr

#endif  // ASMR_REGRET_HPP_
