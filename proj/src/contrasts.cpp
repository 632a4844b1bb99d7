#include "dosetrend/contrasts.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "dosetrend/error.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "contrasts";

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

void require_k(const ValidatedDesign& design) {
  if (design.group_count() < 2) throw Error(ErrorCode::InvalidDesign, kModule, "need a control and at least one dose group");
}

double pooled_size(const std::vector<double>& n, std::size_t from, std::size_t to) {
  return std::accumulate(n.begin() + static_cast<std::ptrdiff_t>(from), n.begin() + static_cast<std::ptrdiff_t>(to), 0.0);
}

}  // namespace

std::string to_string(Alternative alternative) {
  switch (alternative) {
    case Alternative::greater: return "greater";
    case Alternative::less: return "less";
    case Alternative::two_sided: return "two_sided";
  }
  return "?";
}

Alternative parse_alternative(const std::string& text) {
  if (text == "greater") return Alternative::greater;
  if (text == "less") return Alternative::less;
  if (text == "two_sided" || text == "two-sided" || text == "two.sided") return Alternative::two_sided;
  throw Error(ErrorCode::InvalidConfig, kModule, "unknown alternative '" + text + "'");
}

ContrastSet ContrastSet::with_alternative(Alternative alt) const {
  ContrastSet copy = *this;
  copy.alternative = alt;
  return copy;
}

ContrastSet dunnett_matrix(const ValidatedDesign& design) {
  require_k(design);
  const std::size_t k = design.k();
  ContrastSet set;
  set.family_name = "dunnett";
  set.coefficients = Eigen::MatrixXd::Zero(idx(k), idx(k + 1));
  for (std::size_t i = 1; i <= k; ++i) {
    set.coefficients(idx(i - 1), 0) = -1.0;
    set.coefficients(idx(i - 1), idx(i)) = 1.0;
    set.labels.push_back(fmt::format("{} - 0", i));
  }
  return set;
}

ContrastSet williams_matrix(const ValidatedDesign& design) {
  require_k(design);
  const std::size_t k = design.k();
  const auto n = design.sizes();
  ContrastSet set;
  set.family_name = "williams";
  set.coefficients = Eigen::MatrixXd::Zero(idx(k), idx(k + 1));
  for (std::size_t j = 1; j <= k; ++j) {
    const std::size_t first = k + 1 - j;
    const double total = pooled_size(n, first, k + 1);
    const auto row = idx(j - 1);
    set.coefficients(row, 0) = -1.0;
    for (std::size_t i = first; i <= k; ++i) set.coefficients(row, idx(i)) = n[i] / total;
    set.labels.push_back(fmt::format("W {}", j));
  }
  return set;
}

ContrastSet changepoint_matrix(const ValidatedDesign& design) {
  require_k(design);
  const std::size_t k = design.k();
  const auto n = design.sizes();
  ContrastSet set;
  set.family_name = "changepoint";
  set.coefficients = Eigen::MatrixXd::Zero(idx(k), idx(k + 1));
  for (std::size_t j = 1; j <= k; ++j) {
    const double low = pooled_size(n, 0, j);
    const double high = pooled_size(n, j, k + 1);
    const auto row = idx(j - 1);
    for (std::size_t i = 0; i < j; ++i) set.coefficients(row, idx(i)) = -n[i] / low;
    for (std::size_t i = j; i <= k; ++i) set.coefficients(row, idx(i)) = n[i] / high;
    set.labels.push_back(fmt::format("C {}", j));
  }
  return set;
}

ContrastSet sequential_matrix(const ValidatedDesign& design) {
  require_k(design);
  const std::size_t k = design.k();
  ContrastSet set;
  set.family_name = "sequential";
  set.coefficients = Eigen::MatrixXd::Zero(idx(k), idx(k + 1));
  for (std::size_t i = 1; i <= k; ++i) {
    set.coefficients(idx(i - 1), idx(i - 1)) = -1.0;
    set.coefficients(idx(i - 1), idx(i)) = 1.0;
    set.labels.push_back(fmt::format("{} - {}", i, i - 1));
  }
  return set;
}

ContrastSet joint_dunnett_williams(const ValidatedDesign& design) {
  const auto d = dunnett_matrix(design);
  const auto w = williams_matrix(design);
  ContrastSet set;
  set.family_name = "joint_dw";
  set.coefficients.resize(d.coefficients.rows() + w.coefficients.rows(), d.coefficients.cols());
  set.coefficients << d.coefficients, w.coefficients;
  for (const auto& l : d.labels) set.labels.push_back("D: " + l);
  for (const auto& l : w.labels) set.labels.push_back("W: " + l);
  return set;
}

ContrastSet raw_contrasts(std::string family, std::vector<std::string> labels, const Eigen::MatrixXd& coefficients) {
  if (static_cast<Eigen::Index>(labels.size()) != coefficients.rows()) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "label count differs from contrast rows");
  }
  for (Eigen::Index r = 0; r < coefficients.rows(); ++r) {
    const auto row = coefficients.row(r);
    if (std::abs(row.sum()) > 1e-12 * std::max(1.0, row.cwiseAbs().sum())) {
      throw Error(ErrorCode::InvalidDesign, kModule, fmt::format("contrast '{}' does not sum to zero", labels[static_cast<std::size_t>(r)]));
    }
    if (row.cwiseAbs().maxCoeff() == 0.0) {
      throw Error(ErrorCode::InvalidDesign, kModule, fmt::format("contrast '{}' is the zero vector", labels[static_cast<std::size_t>(r)]));
    }
  }
  ContrastSet set;
  set.family_name = std::move(family);
  set.labels = std::move(labels);
  set.coefficients = coefficients;
  return set;
}

ContrastSet contrasts_by_name(const std::string& family, const ValidatedDesign& design) {
  if (family == "dunnett") return dunnett_matrix(design);
  if (family == "williams") return williams_matrix(design);
  if (family == "changepoint") return changepoint_matrix(design);
  if (family == "sequential") return sequential_matrix(design);
  if (family == "joint_dw") return joint_dunnett_williams(design);
  throw Error(ErrorCode::InvalidConfig, kModule, "unknown contrast family '" + family + "'");
}

std::string format_contrast_matrix(const ContrastSet& set, const ValidatedDesign& design) {
  std::string out = "Contrast";
  for (const auto& g : design.groups) out += "\t" + g.label;
  out += "\n";
  for (std::size_t r = 0; r < set.rows(); ++r) {
    out += set.labels[r];
    for (Eigen::Index c = 0; c < set.coefficients.cols(); ++c) {
      double v = set.coefficients(idx(r), c);
      if (v == 0.0) v = 0.0;  // drop negative zero
      out += fmt::format("\t{:.6g}", v);
    }
    out += "\n";
  }
  return out;
}

std::string to_string(ScoringKind kind) {
  switch (kind) {
    case ScoringKind::arithmetic: return "arithmetic";
    case ScoringKind::ordinal: return "ordinal";
    case ScoringKind::log_with_s0: return "log_with_s0";
  }
  return "?";
}

double log_dose_zero_score(double d1, double d2, double d3) {
  return std::log(d2) - std::log(d3 / d2) * (d2 - d1) / (d3 - d2);
}

DoseScoring dose_scores(const ValidatedDesign& design, ScoringKind kind) {
  require_k(design);
  const auto doses = design.doses();
  DoseScoring scoring;
  scoring.kind = kind;
  switch (kind) {
    case ScoringKind::arithmetic:
      scoring.scores = doses;
      break;
    case ScoringKind::ordinal:
      for (std::size_t i = 0; i < doses.size(); ++i) scoring.scores.push_back(static_cast<double>(i));
      break;
    case ScoringKind::log_with_s0: {
      for (std::size_t i = 1; i < doses.size(); ++i) {
        if (doses[i] <= 0) {
          throw Error(ErrorCode::NonPositiveDoseForLog, kModule,
                      fmt::format("dose level {} is {}; only the lowest level may be zero (it is replaced by S0)", i, doses[i]));
        }
      }
      if (doses[0] > 0) {
        for (const double d : doses) scoring.scores.push_back(std::log(d));
        break;
      }
      if (doses.size() < 3) {
        throw Error(ErrorCode::NonPositiveDoseForLog, kModule,
                    "a zero lowest dose needs at least three dose levels for the S0 substitution");
      }
      scoring.scores.push_back(log_dose_zero_score(doses[0], doses[1], doses[2]));
      for (std::size_t i = 1; i < doses.size(); ++i) scoring.scores.push_back(std::log(doses[i]));
      break;
    }
  }
  return scoring;
}

}  // namespace dosetrend
