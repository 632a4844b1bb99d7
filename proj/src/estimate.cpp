#include "dosetrend/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <fmt/format.h>

#include "dosetrend/error.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "estimate";

std::uint64_t hash_matrix(const Eigen::MatrixXd& x) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto mix = [&h](const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ull;
    }
  };
  const std::int64_t dims[2] = {x.rows(), x.cols()};
  mix(dims, sizeof dims);
  mix(x.data(), static_cast<std::size_t>(x.size()) * sizeof(double));
  return h;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

Eigen::MatrixXd invert_spd(const Eigen::MatrixXd& a, ErrorCode on_failure) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const double scale = std::max(1.0, a.diagonal().cwiseAbs().maxCoeff());
  if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 1e-12 * scale).any()) {
    throw Error(on_failure, kModule, "information matrix is singular");
  }
  return symmetrize(ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
}

Eigen::MatrixXd cell_means_matrix(const std::vector<std::size_t>& groups, std::size_t g) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()), static_cast<Eigen::Index>(g));
  for (std::size_t r = 0; r < groups.size(); ++r) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(groups[r])) = 1.0;
  return x;
}

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

double binomial_deviance(const Eigen::VectorXd& s, const Eigen::VectorXd& m, const Eigen::VectorXd& p) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (m[i] <= 0) continue;
    const double f = m[i] - s[i];
    dev += xlogy(s[i], s[i] / (m[i] * p[i])) + xlogy(f, f / (m[i] * (1.0 - p[i])));
  }
  return 2.0 * dev;
}

Eigen::VectorXd logistic(const Eigen::VectorXd& eta) {
  return eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
}

}  // namespace

std::string to_string(CovarianceEstimator estimator) {
  switch (estimator) {
    case CovarianceEstimator::model_based: return "model_based";
    case CovarianceEstimator::HC0: return "HC0";
    case CovarianceEstimator::HC3: return "HC3";
  }
  return "?";
}

CovarianceEstimator parse_covariance_estimator(const std::string& text) {
  if (text == "model_based" || text == "model-based" || text == "model") return CovarianceEstimator::model_based;
  if (text == "HC0" || text == "hc0" || text == "sandwich") return CovarianceEstimator::HC0;
  if (text == "HC3" || text == "hc3") return CovarianceEstimator::HC3;
  throw Error(ErrorCode::InvalidConfig, kModule, "unknown covariance estimator '" + text + "'");
}

Eigen::MatrixXd FittedModel::score_contributions() const {
  return design_matrix.array().colwise() * residuals.array();
}

Eigen::VectorXd FittedModel::leverages() const {
  Eigen::VectorXd h(design_matrix.rows());
  for (Eigen::Index i = 0; i < design_matrix.rows(); ++i) {
    const auto row = design_matrix.row(i);
    h[i] = working_weights[i] * (row * bread * row.transpose())(0, 0);
  }
  return h;
}

FittedModel fit_ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (x.rows() != y.size()) throw Error(ErrorCode::DimensionMismatch, kModule, "design rows differ from response length");
  const auto n = x.rows();
  const auto p = x.cols();
  if (n <= p) {
    throw Error(ErrorCode::ZeroResidualDf, kModule, fmt::format("{} observations for {} parameters", n, p));
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) throw Error(ErrorCode::RankDeficientScoring, kModule, "design matrix is rank deficient");

  FittedModel model;
  model.coefficients = qr.solve(y);
  model.design_matrix = x;
  model.working_weights = Eigen::VectorXd::Ones(n);
  model.residuals = y - x * model.coefficients;
  model.bread = invert_spd(x.transpose() * x, ErrorCode::RankDeficientScoring);
  model.residual_df = static_cast<double>(n - p);
  model.sigma2 = model.residuals.squaredNorm() / model.residual_df;
  model.scale = LinkScale::identity;
  model.design_matrix_hash = hash_matrix(x);
  return model;
}

FittedModel fit_ols(const ValidatedDesign& design, const DoseResponseTable& table) {
  if (design.endpoint != EndpointKind::continuous || table.endpoint != EndpointKind::continuous) {
    throw Error(ErrorCode::EndpointMismatch, kModule, "least squares needs a continuous endpoint");
  }
  const auto groups = row_groups(design, table);
  const std::size_t g = design.group_count();
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (table.rows.size() <= g) {
    throw Error(ErrorCode::ZeroResidualDf, kModule,
                fmt::format("{} observations for {} group means", table.rows.size(), g));
  }

  // Means straight from the group summaries so coefficients equal sample means.
  const auto summaries = group_summaries(design, table);
  FittedModel model;
  model.coefficients.resize(static_cast<Eigen::Index>(g));
  model.bread = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
  for (std::size_t i = 0; i < g; ++i) {
    model.coefficients[static_cast<Eigen::Index>(i)] = summaries[i].mean;
    model.bread(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 / static_cast<double>(design.groups[i].n);
  }
  model.design_matrix = cell_means_matrix(groups, g);
  model.working_weights = Eigen::VectorXd::Ones(n);
  model.residuals.resize(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    model.residuals[r] = table.rows[static_cast<std::size_t>(r)].response - model.coefficients[static_cast<Eigen::Index>(groups[static_cast<std::size_t>(r)])];
  }
  model.residual_df = static_cast<double>(table.rows.size() - g);
  model.sigma2 = model.residuals.squaredNorm() / model.residual_df;
  model.scale = LinkScale::identity;
  model.design_matrix_hash = hash_matrix(model.design_matrix);
  return model;
}

FittedModel fit_glm_binomial_logit(const Eigen::MatrixXd& x, const Eigen::VectorXd& successes,
                                   const Eigen::VectorXd& trials, const IrlsOptions& options) {
  if (x.rows() != successes.size() || x.rows() != trials.size()) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "design rows differ from count vectors");
  }
  const double total_s = successes.sum();
  const double total_m = trials.sum();
  if (total_s <= 0 || total_s >= total_m) {
    throw Error(ErrorCode::DegenerateCounts, kModule, "need at least one success and one failure overall");
  }
  const auto n = x.rows();

  // Empirical logits with a Haldane correction as the starting linear predictor.
  Eigen::VectorXd eta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    eta[i] = std::log((successes[i] + 0.5) / (trials[i] - successes[i] + 0.5));
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  Eigen::VectorXd p = logistic(eta);
  double deviance = binomial_deviance(successes, trials, p);
  int iteration = 0;
  bool converged = false;
  while (iteration < options.max_iterations) {
    ++iteration;
    Eigen::VectorXd w(n);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      w[i] = trials[i] * p[i] * (1.0 - p[i]);
      z[i] = w[i] > 0 ? eta[i] + (successes[i] - trials[i] * p[i]) / w[i] : eta[i];
    }
    const Eigen::MatrixXd xtw = x.transpose() * w.asDiagonal();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtw * x);
    if (ldlt.info() != Eigen::Success) {
      throw Error(ErrorCode::NoConvergence, kModule, "weighted information matrix is singular");
    }
    beta = ldlt.solve(xtw * z);
    eta = x * beta;
    p = logistic(eta);
    if (beta.cwiseAbs().maxCoeff() > options.separation_threshold) {
      throw Error(ErrorCode::SeparationDetected, kModule,
                  fmt::format("|coefficient| exceeded {} at iteration {}; a fitted proportion is pinned at 0 or 1",
                              options.separation_threshold, iteration));
    }
    const double new_deviance = binomial_deviance(successes, trials, p);
    const Eigen::VectorXd score = x.transpose() * (successes - trials.cwiseProduct(p));
    const double relative_change = std::abs(new_deviance - deviance) / (std::abs(new_deviance) + 0.1);
    deviance = new_deviance;
    if (score.cwiseAbs().maxCoeff() < options.score_tolerance || relative_change < options.deviance_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence, kModule, fmt::format("IRLS did not converge in {} iterations", options.max_iterations));
  }

  FittedModel model;
  model.coefficients = beta;
  model.design_matrix = x;
  model.working_weights = trials.array() * p.array() * (1.0 - p.array());
  model.residuals = successes - trials.cwiseProduct(p);
  model.bread = invert_spd(x.transpose() * model.working_weights.asDiagonal() * x, ErrorCode::NoConvergence);
  model.sigma2 = 1.0;
  model.residual_df = kInfiniteDf;
  model.scale = LinkScale::logit;
  model.design_matrix_hash = hash_matrix(x);
  model.iterations = iteration;
  return model;
}

FittedModel fit_glm_binomial_logit(const ValidatedDesign& design, const DoseResponseTable& table,
                                   const IrlsOptions& options) {
  if (design.endpoint != EndpointKind::binomial || table.endpoint != EndpointKind::binomial) {
    throw Error(ErrorCode::EndpointMismatch, kModule, "the logit model needs a binomial endpoint");
  }
  const auto groups = row_groups(design, table);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::VectorXd s(n);
  Eigen::VectorXd m(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    s[r] = static_cast<double>(row.successes);
    m[r] = static_cast<double>(row.successes + row.failures);
  }
  return fit_glm_binomial_logit(cell_means_matrix(groups, design.group_count()), s, m, options);
}

FittedModel fit_cell_means(const ValidatedDesign& design, const DoseResponseTable& table) {
  return design.endpoint == EndpointKind::continuous ? fit_ols(design, table)
                                                     : fit_glm_binomial_logit(design, table);
}

Eigen::MatrixXd covariance(const FittedModel& model, CovarianceEstimator estimator) {
  if (estimator == CovarianceEstimator::model_based) {
    return symmetrize(model.sigma2 * model.bread);
  }
  const Eigen::VectorXd h = model.leverages();
  if ((h.array() >= 1.0 - 1e-10).any()) {
    throw Error(ErrorCode::ZeroResidualDf, kModule,
                "a row has leverage 1 (single-observation group); sandwich covariance is undefined");
  }
  Eigen::MatrixXd u = model.score_contributions();
  if (estimator == CovarianceEstimator::HC3) {
    u = u.array().colwise() / (1.0 - h.array());
  }
  const Eigen::MatrixXd meat = u.transpose() * u;
  return symmetrize(model.bread * meat * model.bread);
}

CoefficientEstimates with_covariance(const FittedModel& model, CovarianceEstimator estimator) {
  return {model.coefficients, covariance(model, estimator), model.residual_df, model.scale};
}

CoefficientEstimates JointFit::slope_estimates() const {
  return {slopes, slope_covariance, df, scale};
}

JointFit fit_mmm(const ValidatedDesign& design, const DoseResponseTable& table,
                 const std::vector<ScoringColumn>& scorings) {
  if (scorings.empty()) throw Error(ErrorCode::DimensionMismatch, kModule, "no dose scorings supplied");
  const auto groups = row_groups(design, table);
  const auto n = static_cast<Eigen::Index>(table.rows.size());

  Eigen::VectorXd y(n);
  Eigen::VectorXd s(n);
  Eigen::VectorXd m(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    y[r] = row.response;
    s[r] = static_cast<double>(row.successes);
    m[r] = static_cast<double>(row.successes + row.failures);
  }

  JointFit joint;
  joint.scale = design.endpoint == EndpointKind::continuous ? LinkScale::identity : LinkScale::logit;
  std::vector<Eigen::MatrixXd> contributions;
  Eigen::Index total_params = 0;
  for (const auto& scoring : scorings) {
    if (scoring.group_scores.size() != design.group_count()) {
      throw Error(ErrorCode::DimensionMismatch, kModule,
                  fmt::format("scoring '{}' has {} scores for {} groups", scoring.tag,
                              scoring.group_scores.size(), design.group_count()));
    }
    const auto [lo, hi] = std::minmax_element(scoring.group_scores.begin(), scoring.group_scores.end());
    if (!(*hi > *lo)) {
      throw Error(ErrorCode::RankDeficientScoring, kModule, fmt::format("scoring '{}' is constant", scoring.tag));
    }
    Eigen::MatrixXd x(n, 2);
    for (Eigen::Index r = 0; r < n; ++r) {
      x(r, 0) = 1.0;
      x(r, 1) = scoring.group_scores[groups[static_cast<std::size_t>(r)]];
    }
    FittedModel model = design.endpoint == EndpointKind::continuous ? fit_ols(x, y) : fit_glm_binomial_logit(x, s, m);
    contributions.push_back(model.score_contributions());
    total_params += model.design_matrix.cols();
    joint.model_tags.push_back(scoring.tag);
    joint.models.push_back(std::move(model));
  }

  Eigen::MatrixXd u(n, total_params);
  Eigen::MatrixXd bread = Eigen::MatrixXd::Zero(total_params, total_params);
  joint.stacked_coefficients.resize(total_params);
  Eigen::Index offset = 0;
  std::vector<Eigen::Index> slope_index;
  for (std::size_t j = 0; j < joint.models.size(); ++j) {
    const auto& model = joint.models[j];
    const auto p = model.design_matrix.cols();
    u.middleCols(offset, p) = contributions[j];
    bread.block(offset, offset, p, p) = model.bread;
    joint.stacked_coefficients.segment(offset, p) = model.coefficients;
    slope_index.push_back(offset + 1);
    offset += p;
  }
  joint.joint_covariance = symmetrize(bread * (u.transpose() * u) * bread);

  const auto k = static_cast<Eigen::Index>(slope_index.size());
  joint.slopes.resize(k);
  joint.slope_covariance.resize(k, k);
  for (Eigen::Index a = 0; a < k; ++a) {
    joint.slopes[a] = joint.stacked_coefficients[slope_index[static_cast<std::size_t>(a)]];
    for (Eigen::Index b = 0; b < k; ++b) {
      joint.slope_covariance(a, b) = joint.joint_covariance(slope_index[static_cast<std::size_t>(a)], slope_index[static_cast<std::size_t>(b)]);
    }
  }
  joint.df = design.endpoint == EndpointKind::continuous ? static_cast<double>(n - 2) : kInfiniteDf;
  return joint;
}

}  // namespace dosetrend
