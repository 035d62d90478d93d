// SPDX-License-Identifier: Apache-2.0
#include "fillmass/fusion_mass.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fillmass/errors.hpp"

namespace fillmass::fusion {

ClassProbs::ClassProbs(std::vector<double> p) : p_(std::move(p)) {
  if (p_.empty()) throw DomainError("probability vector is empty");
  double sum = 0;
  for (double v : p_) {
    if (!(v >= 0) || !std::isfinite(v)) throw DomainError("probabilities must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError("probabilities must sum to 1");
}

ClassProbs average_probs(std::span<const ClassProbs> probs) {
  if (probs.empty()) throw DomainError("average of zero probability vectors");
  const int c = probs.front().classes();
  std::vector<double> mean(c, 0.0);
  for (const auto& p : probs) {
    if (p.classes() != c) throw DomainError("cannot average distributions of different sizes");
    for (int i = 0; i < c; ++i) mean[i] += p[i];
  }
  for (double& v : mean) v /= static_cast<double>(probs.size());
  return ClassProbs(std::move(mean));
}

int decode_label(const ClassProbs& probs) {
  const auto& v = probs.values();
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double DensityTable::of(FillingType t) const {
  switch (t) {
    case FillingType::empty: return 0.0;
    case FillingType::pasta: return pasta;
    case FillingType::rice: return rice;
    case FillingType::water: return water;
  }
  return 0.0;
}

void DensityTable::validate() const {
  if (!(pasta > 0 && rice > 0 && water > 0)) throw DomainError("densities must be positive");
}

double filling_mass(double capacity_ml, FillingLevel level, FillingType type,
                    const DensityTable& densities) {
  if (!(capacity_ml >= 0)) throw DomainError("capacity must be non-negative");
  if (type == FillingType::empty) return 0.0;
  return capacity_ml * (percent_of(level) / 100.0) * densities.of(type);
}

double weighted_f1(std::span<const int> predictions, std::span<const int> truth, int classes) {
  if (predictions.size() != truth.size()) throw DomainError("label lists differ in length");
  if (truth.empty()) throw DomainError("weighted F1 of an empty list");
  std::vector<double> tp(classes, 0), fp(classes, 0), fn(classes, 0), support(classes, 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int p = predictions[i], t = truth[i];
    if (p < 0 || p >= classes || t < 0 || t >= classes) throw DomainError("label out of range");
    support[t] += 1;
    if (p == t) {
      tp[t] += 1;
    } else {
      fp[p] += 1;
      fn[t] += 1;
    }
  }
  double score = 0;
  for (int c = 0; c < classes; ++c) {
    if (support[c] == 0) continue;
    const double precision = tp[c] + fp[c] > 0 ? tp[c] / (tp[c] + fp[c]) : 0.0;
    const double recall = tp[c] / support[c];
    const double f1 =
        precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    score += f1 * support[c];
  }
  return score / static_cast<double>(truth.size());
}

namespace {

double relative_score(double predicted, double truth, double zero_tolerance) {
  if (!(truth >= 0)) throw DomainError("ground truth must be non-negative");
  if (truth == 0) return std::abs(predicted) <= zero_tolerance ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - std::abs(predicted - truth) / truth);
}

std::string shortest(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

double capacity_score(double predicted_ml, double true_ml) {
  return relative_score(predicted_ml, true_ml, 1.0);
}

double mass_score(double predicted_g, double true_g) {
  return relative_score(predicted_g, true_g, 1.0);
}

ClassProbs apply_container_consistency(const ClassProbs& type_probs, ContainerType container) {
  if (container != ContainerType::box || type_probs.classes() != kNumFillingTypes) {
    return type_probs;
  }
  std::vector<double> p = type_probs.values();
  p[index_of(FillingType::water)] = 0.0;
  double sum = 0;
  for (double v : p) sum += v;
  if (sum <= 0) return type_probs;
  for (double& v : p) v /= sum;
  return ClassProbs(std::move(p));
}

// ---------------------------------------------------------------------------

std::string format_submission(std::span<const SubmissionRow> rows) {
  std::string out = std::string(kSubmissionHeader) + "\n";
  for (const auto& r : rows) {
    out += r.sequence_id + "," + shortest(r.capacity_ml) + "," +
           std::string(name_of(r.filling_type)) + "," +
           std::to_string(percent_of(r.filling_level)) + "," + shortest(r.mass_g) + "\n";
  }
  return out;
}

std::vector<SubmissionRow> parse_submission(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("submission is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSubmissionHeader) throw FormatError("unexpected submission header: " + line);
  std::vector<SubmissionRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) {
      throw FormatError("submission line " + std::to_string(line_no) + " needs 5 columns");
    }
    auto number = [&](const std::string& s) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError("bad number '" + s + "' on submission line " + std::to_string(line_no));
      }
      return v;
    };
    SubmissionRow r;
    r.sequence_id = cells[0];
    r.capacity_ml = number(cells[1]);
    if (auto t = parse_filling_type(cells[2])) {
      r.filling_type = *t;
    } else {
      const double idx = number(cells[2]);
      if (idx != std::floor(idx)) throw FormatError("bad filling_type on line " + std::to_string(line_no));
      r.filling_type = filling_type_from_index(static_cast<int>(idx));
    }
    const auto level = level_from_percent(static_cast<int>(std::lround(number(cells[3]))));
    if (!level) throw FormatError("filling level must be 0, 50 or 90 on line " + std::to_string(line_no));
    r.filling_level = *level;
    r.mass_g = number(cells[4]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string format_report_json(const MetricReport& report) {
  nlohmann::json doc;
  doc["schema"] = "fillmass.metric_report";
  doc["version"] = 1;
  doc["weighted_f1_filling_type"] = report.weighted_f1_type;
  doc["weighted_f1_filling_level"] = report.weighted_f1_level;
  doc["capacity_score"] = report.capacity_score;
  doc["mass_score"] = report.mass_score;
  nlohmann::json seqs = nlohmann::json::array();
  for (const auto& s : report.sequences) {
    seqs.push_back({{"sequence_id", s.sequence_id},
                    {"type_correct", s.type_correct},
                    {"level_correct", s.level_correct},
                    {"capacity_score", s.capacity_score},
                    {"mass_score", s.mass_score}});
  }
  doc["sequences"] = seqs;
  return doc.dump(2) + "\n";
}

std::string format_report_table(const MetricReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%-22s %8s\n%-22s %8.2f\n%-22s %8.2f\n%-22s %8.2f\n%-22s %8.2f\n",
                "Sub-task", "Score", "Filling Level", 100 * report.weighted_f1_level,
                "Filling Type", 100 * report.weighted_f1_type, "Container Capacity",
                100 * report.capacity_score, "Filling Mass", 100 * report.mass_score);
  return buf;
}

}  // namespace fillmass::fusion
