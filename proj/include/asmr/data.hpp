#ifndef ASMR_DATA_HPP_
#define ASMR_DATA_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace asmr {

enum class Choice { A, B };

inline char choice_letter(Choice c) { return c == Choice::A ? 'A' : 'B'; }

// One two-alternative trial: binary expert ratings for both options plus the
// observed human choice. Feature values are validated to be exactly 0 or 1.
struct TrialRecord {
  std::string subject_id;
  int trial_index = 0;
  std::vector<double> option_a;
  std::vector<double> option_b;
  Choice choice = Choice::A;
};

struct TrialSet {
  std::vector<TrialRecord> records;
  int num_features = 4;
};

using TrialKey = std::pair<std::string, int>;

// Per-(subject, trial) negative log-likelihood of the human choice under the
// black-box reference predictor. Keys must exactly cover a TrialSet.
struct ReferenceLikelihoods {
  std::map<TrialKey, double> entries;

  double at(const std::string& subject_id, int trial_index) const;
};

enum class TrialFormat { csv, json };

TrialSet load_trials(const std::string& path, TrialFormat format);
void save_trials(const TrialSet& trials, const std::string& path,
                 TrialFormat format);

ReferenceLikelihoods load_reference(const std::string& path,
                                    const TrialSet& trials);
void save_reference(const ReferenceLikelihoods& reference,
                    const std::string& path);

// Validates the TrialSet invariants (binary features, unique keys, contiguous
// per-subject indices, uniform feature count). Loaders call this; it is
// exposed for structures built in memory.
void validate_trials(const TrialSet& trials);

// Checks that the reference cache keys exactly match the trial keys and that
// every nll is finite and nonnegative.
void validate_alignment(const ReferenceLikelihoods& reference,
                        const TrialSet& trials);

// Trials of one subject in trial-index order, rearranged into the row-major
// feature matrices the evaluator consumes.
struct SubjectData {
  std::string subject_id;
  int num_trials = 0;
  int num_features = 0;
  std::vector<double> option_a;  // num_trials x num_features, row-major
  std::vector<double> option_b;
  std::vector<Choice> choices;
};

// Splits a validated TrialSet by subject, ordered by subject_id ascending.
std::vector<SubjectData> split_by_subject(const TrialSet& trials);

}  // namespace asmr

#endif  // ASMR_DATA_HPP_
