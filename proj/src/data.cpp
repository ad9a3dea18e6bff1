#include "asmr/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "asmr/errors.hpp"
#include "asmr/text.hpp"

namespace asmr {

namespace {

constexpr const char* kTrialsHeader =
    "subject_id,trial_index,a1,a2,a3,a4,b1,b2,b3,b4,choice";
constexpr const char* kReferenceHeader = "subject_id,trial_index,nll";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << content;
  if (!out) throw IoError("write failure: " + path);
}

std::vector<std::string> nonempty_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    std::string_view line =
        pos == std::string::npos
            ? std::string_view(text).substr(start)
            : std::string_view(text).substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!trim(line).empty()) lines.emplace_back(line);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return lines;
}

double parse_feature(const std::string& field, std::size_t row, int column,
                     char option) {
  double v = 0.0;
  if (!parse_double(field, v)) {
    std::ostringstream msg;
    msg << "row " << row << ": feature " << option << column
        << " is not a number: '" << field << "'";
    throw SchemaError(msg.str());
  }
  return v;
}

TrialSet load_trials_csv(const std::string& path) {
  auto lines = nonempty_lines(read_file(path));
  if (lines.empty() || trim(lines[0]) != kTrialsHeader)
    throw SchemaError("trials file " + path + ": expected header '" +
                      kTrialsHeader + "'");
  TrialSet trials;
  trials.num_features = 4;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    auto fields = split(lines[row], ',');
    if (fields.size() != 11) {
      std::ostringstream msg;
      msg << "row " << row << ": expected 11 columns, got " << fields.size();
      throw SchemaError(msg.str());
    }
    TrialRecord rec;
    rec.subject_id = fields[0];
    if (rec.subject_id.empty()) {
      std::ostringstream msg;
      msg << "row " << row << ": empty subject_id";
      throw SchemaError(msg.str());
    }
    if (!parse_int(fields[1], rec.trial_index)) {
      std::ostringstream msg;
      msg << "row " << row << ": trial_index is not an integer: '" << fields[1]
          << "'";
      throw SchemaError(msg.str());
    }
    for (int f = 0; f < 4; ++f)
      rec.option_a.push_back(parse_feature(fields[2 + f], row, f + 1, 'a'));
    for (int f = 0; f < 4; ++f)
      rec.option_b.push_back(parse_feature(fields[6 + f], row, f + 1, 'b'));
    if (fields[10] == "A") {
      rec.choice = Choice::A;
    } else if (fields[10] == "B") {
      rec.choice = Choice::B;
    } else {
      std::ostringstream msg;
      msg << "row " << row << ": choice must be 'A' or 'B', got '"
          << fields[10] << "'";
      throw SchemaError(msg.str());
    }
    trials.records.push_back(std::move(rec));
  }
  return trials;
}

std::vector<double> json_features(const nlohmann::json& arr,
                                  const std::string& key, std::size_t index) {
  if (!arr.is_array())
    throw SchemaError("record " + std::to_string(index) + ": '" + key +
                      "' must be an array");
  std::vector<double> out;
  for (const auto& v : arr) {
    if (!v.is_number())
      throw SchemaError("record " + std::to_string(index) + ": '" + key +
                        "' holds a non-numeric value");
    out.push_back(v.get<double>());
  }
  return out;
}

TrialSet load_trials_json(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("trials file " + path + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("records") ||
      !doc["records"].is_array())
    throw SchemaError("trials file " + path +
                      ": expected {\"num_features\": n, \"records\": [...]}");
  TrialSet trials;
  trials.num_features = doc.value("num_features", 4);
  std::size_t index = 0;
  for (const auto& item : doc["records"]) {
    if (!item.is_object())
      throw SchemaError("record " + std::to_string(index) +
                        ": expected an object");
    for (const char* key :
         {"subject_id", "trial_index", "option_a", "option_b", "choice"})
      if (!item.contains(key))
        throw SchemaError("record " + std::to_string(index) +
                          ": missing field '" + key + "'");
    TrialRecord rec;
    if (!item["subject_id"].is_string())
      throw SchemaError("record " + std::to_string(index) +
                        ": subject_id must be a string");
    rec.subject_id = item["subject_id"].get<std::string>();
    if (!item["trial_index"].is_number_integer())
      throw SchemaError("record " + std::to_string(index) +
                        ": trial_index must be an integer");
    rec.trial_index = item["trial_index"].get<int>();
    rec.option_a = json_features(item["option_a"], "option_a", index);
    rec.option_b = json_features(item["option_b"], "option_b", index);
    std::string choice = item["choice"].is_string()
                             ? item["choice"].get<std::string>()
                             : std::string();
    if (choice == "A") {
      rec.choice = Choice::A;
    } else if (choice == "B") {
      rec.choice = Choice::B;
    } else {
      throw SchemaError("record " + std::to_string(index) +
                        ": choice must be \"A\" or \"B\"");
    }
    trials.records.push_back(std::move(rec));
    ++index;
  }
  return trials;
}

}  // namespace

double ReferenceLikelihoods::at(const std::string& subject_id,
                                int trial_index) const {
  auto it = entries.find({subject_id, trial_index});
  if (it == entries.end())
    throw AlignmentError("no reference entry for (" + subject_id + ", " +
                         std::to_string(trial_index) + ")");
  return it->second;
}

void validate_trials(const TrialSet& trials) {
  std::set<TrialKey> seen;
  std::map<std::string, std::vector<int>> per_subject;
  for (const auto& rec : trials.records) {
    if (rec.trial_index < 0)
      throw ValidationError("subject " + rec.subject_id +
                            ": negative trial_index " +
                            std::to_string(rec.trial_index));
    if (static_cast<int>(rec.option_a.size()) != trials.num_features ||
        static_cast<int>(rec.option_b.size()) != trials.num_features)
      throw ValidationError(
          "subject " + rec.subject_id + ", trial " +
          std::to_string(rec.trial_index) + ": expected " +
          std::to_string(trials.num_features) + " features per option");
    for (int side = 0; side < 2; ++side) {
      const auto& feats = side == 0 ? rec.option_a : rec.option_b;
      for (int f = 0; f < trials.num_features; ++f) {
        if (feats[f] != 0.0 && feats[f] != 1.0) {
          std::ostringstream msg;
          msg << "subject " << rec.subject_id << ", trial " << rec.trial_index
              << ", column " << (side == 0 ? 'a' : 'b') << (f + 1)
              << ": feature value " << fmt_double(feats[f])
              << " is not binary";
          throw ValidationError(msg.str());
        }
      }
    }
    if (!seen.insert({rec.subject_id, rec.trial_index}).second)
      throw ValidationError("duplicate key (" + rec.subject_id + ", " +
                            std::to_string(rec.trial_index) + ")");
    per_subject[rec.subject_id].push_back(rec.trial_index);
  }
  for (auto& [subject, indices] : per_subject) {
    std::sort(indices.begin(), indices.end());
    for (std::size_t i = 0; i < indices.size(); ++i) {
      if (indices[i] != static_cast<int>(i))
        throw ValidationError("subject " + subject +
                              ": trial indices are not contiguous from 0 "
                              "(first gap at " +
                              std::to_string(i) + ")");
    }
  }
}

TrialSet load_trials(const std::string& path, TrialFormat format) {
  TrialSet trials = format == TrialFormat::csv ? load_trials_csv(path)
                                               : load_trials_json(path);
  validate_trials(trials);
  return trials;
}

void save_trials(const TrialSet& trials, const std::string& path,
                 TrialFormat format) {
  if (format == TrialFormat::csv) {
    std::ostringstream out;
    out << kTrialsHeader << '\n';
    for (const auto& rec : trials.records) {
      out << rec.subject_id << ',' << rec.trial_index;
      for (double v : rec.option_a) out << ',' << fmt_double(v);
      for (double v : rec.option_b) out << ',' << fmt_double(v);
      out << ',' << choice_letter(rec.choice) << '\n';
    }
    write_file(path, out.str());
    return;
  }
  nlohmann::json doc;
  doc["num_features"] = trials.num_features;
  auto& records = doc["records"] = nlohmann::json::array();
  for (const auto& rec : trials.records) {
    nlohmann::json item;
    item["subject_id"] = rec.subject_id;
    item["trial_index"] = rec.trial_index;
    item["option_a"] = rec.option_a;
    item["option_b"] = rec.option_b;
    item["choice"] = std::string(1, choice_letter(rec.choice));
    records.push_back(std::move(item));
  }
  write_file(path, doc.dump(2) + "\n");
}

void validate_alignment(const ReferenceLikelihoods& reference,
                        const TrialSet& trials) {
  std::set<TrialKey> trial_keys;
  for (const auto& rec : trials.records)
    trial_keys.insert({rec.subject_id, rec.trial_index});

  std::vector<std::string> offenders;
  for (const auto& key : trial_keys)
    if (!reference.entries.count(key))
      offenders.push_back("missing (" + key.first + ", " +
                          std::to_string(key.second) + ")");
  for (const auto& [key, nll] : reference.entries) {
    (void)nll;
    if (!trial_keys.count(key))
      offenders.push_back("extra (" + key.first + ", " +
                          std::to_string(key.second) + ")");
  }
  if (!offenders.empty()) {
    std::ostringstream msg;
    msg << "reference cache does not match trials (" << offenders.size()
        << " mismatched keys):";
    for (std::size_t i = 0; i < offenders.size() && i < 10; ++i)
      msg << ' ' << offenders[i];
    if (offenders.size() > 10) msg << " ...";
    throw AlignmentError(msg.str());
  }

  for (const auto& [key, nll] : reference.entries) {
    if (!std::isfinite(nll) || nll < 0.0)
      throw ValidationError("reference nll for (" + key.first + ", " +
                            std::to_string(key.second) +
                            ") must be finite and nonnegative, got " +
                            fmt_double(nll));
  }
}

ReferenceLikelihoods load_reference(const std::string& path,
                                    const TrialSet& trials) {
  auto lines = nonempty_lines(read_file(path));
  if (lines.empty() || trim(lines[0]) != kReferenceHeader)
    throw SchemaError("reference file " + path + ": expected header '" +
                      kReferenceHeader + "'");
  ReferenceLikelihoods reference;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    auto fields = split(lines[row], ',');
    if (fields.size() != 3) {
      std::ostringstream msg;
      msg << "row " << row << ": expected 3 columns, got " << fields.size();
      throw SchemaError(msg.str());
    }
    int trial_index = 0;
    if (!parse_int(fields[1], trial_index)) {
      std::ostringstream msg;
      msg << "row " << row << ": trial_index is not an integer: '" << fields[1]
          << "'";
      throw SchemaError(msg.str());
    }
    double nll = 0.0;
    if (!parse_double(fields[2], nll)) {
      std::ostringstream msg;
      msg << "row " << row << ": nll is not a number: '" << fields[2] << "'";
      throw SchemaError(msg.str());
    }
    TrialKey key{fields[0], trial_index};
    if (!reference.entries.emplace(key, nll).second)
      throw ValidationError("duplicate reference key (" + key.first + ", " +
                            std::to_string(key.second) + ")");
  }
  validate_alignment(reference, trials);
  return reference;
}

void save_reference(const ReferenceLikelihoods& reference,
                    const std::string& path) {
  std::ostringstream out;
  out << kReferenceHeader << '\n';
  for (const auto& [key, nll] : reference.entries)
    out << key.first << ',' << key.second << ',' << fmt_double(nll) << '\n';
  write_file(path, out.str());
}

std::vector<SubjectData> split_by_subject(const TrialSet& trials) {
  std::map<std::string, std::vector<const TrialRecord*>> groups;
  for (const auto& rec : trials.records)
    groups[rec.subject_id].push_back(&rec);

  std::vector<SubjectData> out;
  out.reserve(groups.size());
  for (auto& [subject, recs] : groups) {
    std::sort(recs.begin(), recs.end(),
              [](const TrialRecord* a, const TrialRecord* b) {
                return a->trial_index < b->trial_index;
              });
    SubjectData sd;
    sd.subject_id = subject;
    sd.num_trials = static_cast<int>(recs.size());
    sd.num_features = trials.num_features;
    sd.option_a.reserve(recs.size() * trials.num_features);
    sd.option_b.reserve(recs.size() * trials.num_features);
    sd.choices.reserve(recs.size());
    for (const TrialRecord* rec : recs) {
      sd.option_a.insert(sd.option_a.end(), rec->option_a.begin(),
                         rec->option_a.end());
      sd.option_b.insert(sd.option_b.end(), rec->option_b.begin(),
                         rec->option_b.end());
      sd.choices.push_back(rec->choice);
    }
    out.push_back(std::move(sd));
  }
  return out;
}

}  // namespace asmr
