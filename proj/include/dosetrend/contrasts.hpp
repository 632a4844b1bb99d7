#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dosetrend/data.hpp"

namespace dosetrend {

enum class Alternative { greater, less, two_sided };

std::string to_string(Alternative alternative);
Alternative parse_alternative(const std::string& text);

/// Named contrast rows over the k+1 group means. Rows sum to zero.
struct ContrastSet {
  std::string family_name;
  std::vector<std::string> labels;
  Eigen::MatrixXd coefficients;  // rows x (k+1)
  Alternative alternative = Alternative::greater;

  std::size_t rows() const { return labels.size(); }
  ContrastSet with_alternative(Alternative alt) const;
};

ContrastSet dunnett_matrix(const ValidatedDesign& design);

/// Control versus the n-weighted mean of the top j dose groups, j = 1..k.
ContrastSet williams_matrix(const ValidatedDesign& design);

/// Row j: n-weighted mean of groups >= j minus n-weighted mean of groups < j.
ContrastSet changepoint_matrix(const ValidatedDesign& design);

ContrastSet sequential_matrix(const ValidatedDesign& design);

ContrastSet joint_dunnett_williams(const ValidatedDesign& design);

/// Builds a set from raw coefficients; validates width and zero row sums.
ContrastSet raw_contrasts(std::string family, std::vector<std::string> labels,
                          const Eigen::MatrixXd& coefficients);

ContrastSet contrasts_by_name(const std::string& family, const ValidatedDesign& design);

/// Tab-separated dump, 6 significant digits, header row of group labels.
std::string format_contrast_matrix(const ContrastSet& set, const ValidatedDesign& design);

enum class ScoringKind { arithmetic, ordinal, log_with_s0 };

std::string to_string(ScoringKind kind);

struct DoseScoring {
  ScoringKind kind = ScoringKind::arithmetic;
  std::vector<double> scores;
};

/// S0 = log(d2) - log(d3 / d2) * (d2 - d1) / (d3 - d2): the log-dose score
/// standing in for the lowest level.
double log_dose_zero_score(double d1, double d2, double d3);

DoseScoring dose_scores(const ValidatedDesign& design, ScoringKind kind);

}  // namespace dosetrend
