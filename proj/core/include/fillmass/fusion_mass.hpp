// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fillmass/labels.hpp"

namespace fillmass::fusion {

/// Probability vector over C classes; construction checks p >= 0 and sum 1 (1e-9).
class ClassProbs {
 public:
  explicit ClassProbs(std::vector<double> p);

  const std::vector<double>& values() const { return p_; }
  int classes() const { return static_cast<int>(p_.size()); }
  double operator[](int i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

/// Elementwise mean. DomainError on an empty list or mixed class counts.
ClassProbs average_probs(std::span<const ClassProbs> probs);

/// Argmax with ties going to the lowest index.
int decode_label(const ClassProbs& probs);

/// Grams per millilitre for each non-empty filling.
struct DensityTable {
  double pasta = 0.41;
  double rice = 0.85;
  double water = 1.00;

  double of(FillingType t) const;
  void validate() const;
};

/// capacity * level fraction * density; zero for an empty container.
double filling_mass(double capacity_ml, FillingLevel level, FillingType type,
                    const DensityTable& densities = {});

/// Support-weighted mean of per-class F1 (F1 = 0 when precision + recall = 0).
double weighted_f1(std::span<const int> predictions, std::span<const int> truth, int classes);

/// max(0, 1 - |pred - true| / true); for true = 0, 1 when |pred| <= 1 else 0.
double capacity_score(double predicted_ml, double true_ml);
double mass_score(double predicted_g, double true_g);

/// With the consistency option, a box cannot hold water: water probability
/// mass is dropped and the rest renormalized. Off by default.
ClassProbs apply_container_consistency(const ClassProbs& type_probs, ContainerType container);

// ---------------------------------------------------------------------------
// Submission rows and metric reports

struct SubmissionRow {
  std::string sequence_id;
  double capacity_ml = 0;
  FillingType filling_type = FillingType::empty;
  FillingLevel filling_level = FillingLevel::percent0;
  double mass_g = 0;
};

inline constexpr const char* kSubmissionHeader =
    "sequence_id,container_capacity_ml,filling_type,filling_level_percent,filling_mass_g";

std::string format_submission(std::span<const SubmissionRow> rows);
/// Accepts type names or indices. Throws FormatError on malformed rows.
std::vector<SubmissionRow> parse_submission(const std::string& csv);

struct SequenceScore {
  std::string sequence_id;
  bool type_correct = false;
  bool level_correct = false;
  double capacity_score = 0;
  double mass_score = 0;
};

struct MetricReport {
  double weighted_f1_type = 0;
  double weighted_f1_level = 0;
  double capacity_score = 0;
  double mass_score = 0;
  std::vector<SequenceScore> sequences;
};

std::string format_report_json(const MetricReport& report);
/// Human-readable table with scores scaled by 100.
std::string format_report_table(const MetricReport& report);

}  // namespace fillmass::fusion
