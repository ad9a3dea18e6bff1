#include "asmr/regret.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "asmr/errors.hpp"

namespace asmr {

RegretSet compute_regret(const std::vector<FitResult>& fits,
                         const ReferenceLikelihoods& reference,
                         const TrialSet& trials, double threshold) {
  if (!(threshold > 0.0))
    throw ValidationError("regret threshold must be positive");

  std::map<std::string, const FitResult*> by_subject;
  for (const auto& fr : fits) by_subject[fr.subject_id] = &fr;

  RegretSet regret;
  regret.threshold = threshold;

  for (const auto& rec : trials.records) {
    auto it = by_subject.find(rec.subject_id);
    if (it == by_subject.end())
      throw AlignmentError("no fit result for subject " + rec.subject_id);
    const FitResult& fr = *it->second;
    if (rec.trial_index >= static_cast<int>(fr.per_trial_nll.size()))
      throw AlignmentError("fit for subject " + rec.subject_id + " covers " +
                           std::to_string(fr.per_trial_nll.size()) +
                           " trials but trial " +
                           std::to_string(rec.trial_index) + " was requested");
    double model_nll = fr.per_trial_nll[rec.trial_index];
    double reference_nll = reference.at(rec.subject_id, rec.trial_index);
    double delta = model_nll - reference_nll;
    if (delta < threshold) continue;

    RegretPoint point;
    point.subject_id = rec.subject_id;
    point.trial_index = rec.trial_index;
    point.option_a = rec.option_a;
    point.option_b = rec.option_b;
    point.human_choice = rec.choice;
    point.model_nll = model_nll;
    point.model_prob_of_choice = std::exp(-model_nll);
    point.reference_nll = reference_nll;
    point.delta = delta;
    regret.points.push_back(std::move(point));
  }

  std::sort(regret.points.begin(), regret.points.end(),
            [](const RegretPoint& a, const RegretPoint& b) {
              if (a.delta != b.delta) return a.delta > b.delta;
              if (a.subject_id != b.subject_id)
                return a.subject_id < b.subject_id;
              return a.trial_index < b.trial_index;
            });
  return regret;
}

nlohmann::json to_json(const RegretSet& regret) {
  nlohmann::json doc;
  doc["threshold"] = regret.threshold;
  auto& points = doc["points"] = nlohmann::json::array();
  for (const auto& p : regret.points) {
    nlohmann::json item;
    item["subject_id"] = p.subject_id;
    item["trial_index"] = p.trial_index;
    item["option_a"] = p.option_a;
    item["option_b"] = p.option_b;
    item["human_choice"] = std::string(1, choice_letter(p.human_choice));
    item["model_prob_of_choice"] = p.model_prob_of_choice;
    item["model_nll"] = p.model_nll;
    item["reference_nll"] = p.reference_nll;
    item["delta"] = p.delta;
    points.push_back(std::move(item));
  }
  return doc;
}

}  // namespace asmr
