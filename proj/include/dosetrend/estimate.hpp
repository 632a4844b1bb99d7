#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dosetrend/data.hpp"

namespace dosetrend {

enum class LinkScale { identity, logit };
enum class CovarianceEstimator { model_based, HC0, HC3 };

std::string to_string(CovarianceEstimator estimator);
CovarianceEstimator parse_covariance_estimator(const std::string& text);

inline constexpr double kInfiniteDf = std::numeric_limits<double>::infinity();

/// A fitted one-way model together with everything needed to form any of
/// the supported covariance estimators after the fact.
struct FittedModel {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd design_matrix;   // one row per table row
  Eigen::VectorXd working_weights; // 1 for OLS, m p (1 - p) for the logit GLM
  Eigen::VectorXd residuals;       // response scale: y - fitted, or s - m p
  Eigen::MatrixXd bread;           // (X' W X)^-1
  double sigma2 = 1.0;             // residual variance (OLS); 1 for the GLM
  double residual_df = kInfiniteDf;
  LinkScale scale = LinkScale::identity;
  std::uint64_t design_matrix_hash = 0;
  int iterations = 0;

  std::size_t nobs() const { return static_cast<std::size_t>(design_matrix.rows()); }
  std::size_t nparams() const { return static_cast<std::size_t>(design_matrix.cols()); }
  /// Per-row score contributions x_i * residual_i.
  Eigen::MatrixXd score_contributions() const;
  /// Diagonal of the (weighted) hat matrix.
  Eigen::VectorXd leverages() const;
};

/// Coefficients paired with a chosen covariance; what `mct` consumes.
struct CoefficientEstimates {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  double df = kInfiniteDf;
  LinkScale scale = LinkScale::identity;
};

/// Cell-means least squares: one coefficient per dose group.
FittedModel fit_ols(const ValidatedDesign& design, const DoseResponseTable& table);

/// Least squares on an arbitrary design matrix (rows follow the table).
FittedModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

struct IrlsOptions {
  int max_iterations = 50;
  double score_tolerance = 1e-8;
  double deviance_tolerance = 1e-10;
  double separation_threshold = 15.0;
};

/// Cell-means binomial-logit model fitted by IRLS on aggregated counts.
FittedModel fit_glm_binomial_logit(const ValidatedDesign& design,
                                   const DoseResponseTable& table,
                                   const IrlsOptions& options = {});

FittedModel fit_glm_binomial_logit(const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& successes,
                                   const Eigen::VectorXd& trials,
                                   const IrlsOptions& options = {});

/// Fits the cell-means model appropriate for the table's endpoint.
FittedModel fit_cell_means(const ValidatedDesign& design, const DoseResponseTable& table);

Eigen::MatrixXd covariance(const FittedModel& model, CovarianceEstimator estimator);

CoefficientEstimates with_covariance(const FittedModel& model, CovarianceEstimator estimator);

/// Joint fit of several intercept+slope models that share the same rows.
struct JointFit {
  std::vector<std::string> model_tags;
  std::vector<FittedModel> models;
  Eigen::VectorXd stacked_coefficients;  // all parameters, model by model
  Eigen::MatrixXd joint_covariance;      // sandwich over stacked estimating functions
  Eigen::VectorXd slopes;
  Eigen::MatrixXd slope_covariance;
  double df = kInfiniteDf;
  LinkScale scale = LinkScale::identity;

  CoefficientEstimates slope_estimates() const;
};

struct ScoringColumn {
  std::string tag;
  std::vector<double> group_scores;  // one score per dose group
};

JointFit fit_mmm(const ValidatedDesign& design, const DoseResponseTable& table,
                 const std::vector<ScoringColumn>& scorings);

}  // namespace dosetrend
