#include "dosetrend/mvt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <fmt/format.h>

#include "dosetrend/error.hpp"
#include "dosetrend/random.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "mvt";
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEigenFloor = 1e-12;

constexpr std::array<int, 100> kPrimes = {
    2,   3,   5,   7,   11,  13,  17,  19,  23,  29,  31,  37,  41,  43,  47,  53,  59,  61,  67,  71,
    73,  79,  83,  89,  97,  101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173,
    179, 181, 191, 193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251, 257, 263, 269, 271, 277, 281,
    283, 293, 307, 311, 313, 317, 331, 337, 347, 349, 353, 359, 367, 373, 379, 383, 389, 397, 401, 409,
    419, 421, 431, 433, 439, 443, 449, 457, 461, 463, 467, 479, 487, 491, 499, 503, 509, 521, 523, 541};

double phi_density(double x) { return std::exp(-0.5 * x * x) * 0.39894228040143267794; }

bool is_normal_df(double df) { return !std::isfinite(df); }

// Bounds permuted and Cholesky factor after Genz-Bretz variable reordering.
struct Prepared {
  std::size_t m = 0;
  Eigen::MatrixXd chol;
  std::vector<double> lower;
  std::vector<double> upper;
};

Eigen::MatrixXd clip_to_psd(const Eigen::MatrixXd& r) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r);
  if (eig.eigenvalues().minCoeff() >= kEigenFloor) return r;
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(kEigenFloor);
  Eigen::MatrixXd clipped = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  const Eigen::VectorXd d = clipped.diagonal().cwiseSqrt().cwiseInverse();
  clipped = d.asDiagonal() * clipped * d.asDiagonal();
  return 0.5 * (clipped + clipped.transpose());
}

Prepared prepare(std::span<const double> lower, std::span<const double> upper, const CorrelationMatrix& corr) {
  const std::size_t m = corr.dim();
  Eigen::MatrixXd sigma = clip_to_psd(corr.entries());
  Prepared p;
  p.m = m;
  p.lower.assign(lower.begin(), lower.end());
  p.upper.assign(upper.begin(), upper.end());
  p.chol = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::vector<double> y(m, 0.0);
  auto& c = p.chol;
  for (std::size_t i = 0; i < m; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    // Choose the remaining variable with the smallest expected interval probability.
    std::size_t best = i;
    double best_prob = kInf;
    for (std::size_t j = i; j < m; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      double s = 0.0;
      double ss = 0.0;
      for (std::size_t k = 0; k < i; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        s += c(jj, kk) * y[k];
        ss += c(jj, kk) * c(jj, kk);
      }
      const double denom = std::sqrt(std::max(sigma(jj, jj) - ss, kEigenFloor));
      const double prob = normal_cdf((p.upper[j] - s) / denom) - normal_cdf((p.lower[j] - s) / denom);
      if (prob < best_prob) {
        best_prob = prob;
        best = j;
      }
    }
    if (best != i) {
      const auto bb = static_cast<Eigen::Index>(best);
      sigma.row(ii).swap(sigma.row(bb));
      sigma.col(ii).swap(sigma.col(bb));
      c.row(ii).swap(c.row(bb));
      std::swap(p.lower[i], p.lower[best]);
      std::swap(p.upper[i], p.upper[best]);
    }
    double ss = 0.0;
    for (std::size_t k = 0; k < i; ++k) ss += c(ii, static_cast<Eigen::Index>(k)) * c(ii, static_cast<Eigen::Index>(k));
    const double diag = std::sqrt(std::max(sigma(ii, ii) - ss, kEigenFloor));
    c(ii, ii) = diag;
    for (std::size_t l = i + 1; l < m; ++l) {
      const auto ll = static_cast<Eigen::Index>(l);
      double dot = 0.0;
      for (std::size_t k = 0; k < i; ++k) dot += c(ll, static_cast<Eigen::Index>(k)) * c(ii, static_cast<Eigen::Index>(k));
      c(ll, ii) = (sigma(ll, ii) - dot) / diag;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < i; ++k) s += c(ii, static_cast<Eigen::Index>(k)) * y[k];
    const double a = (p.lower[i] - s) / diag;
    const double b = (p.upper[i] - s) / diag;
    const double mass = normal_cdf(b) - normal_cdf(a);
    if (mass > 1e-300) {
      const double da = std::isfinite(a) ? phi_density(a) : 0.0;
      const double db = std::isfinite(b) ? phi_density(b) : 0.0;
      y[i] = (da - db) / mass;
    } else {
      y[i] = std::isfinite(a) ? a : (std::isfinite(b) ? b : 0.0);
    }
  }
  return p;
}

// Separation-of-variables integrand at one unit-cube point.
double integrand(const Prepared& p, const double* w, double df, std::vector<double>& y) {
  double scale = 1.0;
  if (!is_normal_df(df)) {
    const double u = std::clamp(w[p.m - 1], 1e-300, 1.0 - 1e-16);
    scale = std::sqrt(2.0 * boost::math::gamma_p_inv(0.5 * df, u) / df);
  }
  const auto& c = p.chol;
  double d = normal_cdf(p.lower[0] * scale / c(0, 0));
  double e = normal_cdf(p.upper[0] * scale / c(0, 0));
  double f = e - d;
  for (std::size_t i = 1; i < p.m; ++i) {
    if (f <= 0.0) return 0.0;
    const double u = std::clamp(d + w[i - 1] * (e - d), 1e-300, 1.0 - 1e-16);
    y[i - 1] = normal_quantile(u);
    double s = 0.0;
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t k = 0; k < i; ++k) s += c(ii, static_cast<Eigen::Index>(k)) * y[k];
    const double diag = c(ii, ii);
    d = normal_cdf((p.lower[i] * scale - s) / diag);
    e = normal_cdf((p.upper[i] * scale - s) / diag);
    f *= e - d;
  }
  return std::max(f, 0.0);
}

std::size_t integration_dim(std::size_t m, double df) { return (m - 1) + (is_normal_df(df) ? 0 : 1); }

// Randomized Richtmyer lattice rule; `points` per randomization.
ProbResult lattice_estimate(const Prepared& p, double df, std::int64_t points, int randomizations,
                            std::uint64_t seed, std::uint64_t round) {
  const std::size_t dim = integration_dim(p.m, df);
  std::vector<double> generator(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const double r = std::sqrt(static_cast<double>(kPrimes[j % kPrimes.size()]));
    generator[j] = r - std::floor(r);
  }
  std::vector<double> w(std::max<std::size_t>(dim, 1));
  std::vector<double> x(dim);
  std::vector<double> y(p.m);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(randomizations));
  for (int rep = 0; rep < randomizations; ++rep) {
    Philox4x32 rng(seed, (round << 16) | static_cast<std::uint64_t>(rep));
    std::vector<double> shift(dim);
    for (auto& s : shift) s = rng.uniform();
    double sum = 0.0;
    for (std::int64_t k = 1; k <= points; ++k) {
      for (std::size_t j = 0; j < dim; ++j) {
        double v = static_cast<double>(k) * generator[j] + shift[j];
        v -= std::floor(v);
        w[j] = 1.0 - std::abs(2.0 * v - 1.0);  // baker's transform
      }
      sum += integrand(p, w.data(), df, y);
    }
    means.push_back(sum / static_cast<double>(points));
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
  double var = 0.0;
  for (const double v : means) var += (v - mean) * (v - mean);
  var /= static_cast<double>(means.size() * (means.size() - 1));
  ProbResult out;
  out.value = std::clamp(mean, 0.0, 1.0);
  out.mc_error = std::sqrt(var);
  out.points_used = points * randomizations;
  out.seed = seed;
  return out;
}

void check_bounds(std::span<const double> lower, std::span<const double> upper, const CorrelationMatrix& corr) {
  if (lower.size() != corr.dim() || upper.size() != corr.dim()) {
    throw Error(ErrorCode::DimensionMismatch, kModule,
                fmt::format("bounds of length {}/{} for a {}-dimensional correlation", lower.size(), upper.size(), corr.dim()));
  }
  if (corr.dim() == 0 || corr.dim() > 100) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "dimension must be in 1..100");
  }
  for (std::size_t i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || !(lower[i] < upper[i])) {
      throw Error(ErrorCode::InvalidBounds, kModule, fmt::format("coordinate {}: need lower < upper", i));
    }
  }
}

ProbResult rect_prob(std::span<const double> lower, std::span<const double> upper, const CorrelationMatrix& corr,
                     double df, std::uint64_t seed, const MvtOptions& options, std::int64_t fixed_points = 0) {
  check_bounds(lower, upper, corr);
  if (!(df > 0)) throw Error(ErrorCode::InvalidBounds, kModule, "degrees of freedom must be positive");
  if (corr.dim() == 1) {
    ProbResult exact;
    exact.value = is_normal_df(df) ? normal_cdf(upper[0]) - normal_cdf(lower[0])
                                   : student_t_cdf(upper[0], df) - student_t_cdf(lower[0], df);
    exact.value = std::clamp(exact.value, 0.0, 1.0);
    exact.seed = seed;
    return exact;
  }
  const Prepared prepared = prepare(lower, upper, corr);
  const int reps = std::max(2, options.randomizations);
  if (fixed_points > 0) return lattice_estimate(prepared, df, fixed_points, reps, seed, 0);

  std::int64_t points = std::max<std::int64_t>(options.initial_points, 16);
  std::int64_t used = 0;
  ProbResult result;
  for (std::uint64_t round = 0;; ++round) {
    result = lattice_estimate(prepared, df, points, reps, seed, round);
    used += result.points_used;
    if (result.mc_error <= options.abs_error) break;
    if (used + 2 * points * reps > options.max_points) break;
    points *= 2;
  }
  result.points_used = used;
  return result;
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.70710678118654752440); }

double normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return -1.41421356237309504880 * boost::math::erfc_inv(2.0 * p);
}

double student_t_cdf(double x, double df) {
  if (is_normal_df(df)) return normal_cdf(x);
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t(df), x);
}

double student_t_quantile(double p, double df) {
  if (is_normal_df(df)) return normal_quantile(p);
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return boost::math::quantile(boost::math::students_t(df), p);
}

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "correlation matrix must be square and non-empty");
  }
  if (!entries_.allFinite()) throw Error(ErrorCode::NotPSD, kModule, "correlation matrix has non-finite entries");
  const auto m = entries_.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (std::abs(entries_(i, i) - 1.0) > 1e-8) {
      throw Error(ErrorCode::NotPSD, kModule, fmt::format("diagonal entry {} is {}, not 1", i, entries_(i, i)));
    }
    entries_(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(entries_(i, j) - entries_(j, i)) > 1e-10) {
        throw Error(ErrorCode::NotPSD, kModule, "correlation matrix is not symmetric");
      }
      if (std::abs(entries_(i, j)) > 1.0 + 1e-10) {
        throw Error(ErrorCode::NotPSD, kModule, fmt::format("|r({},{})| exceeds 1", i, j));
      }
      const double v = std::clamp(0.5 * (entries_(i, j) + entries_(j, i)), -1.0, 1.0);
      entries_(i, j) = v;
      entries_(j, i) = v;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw Error(ErrorCode::NotPSD, kModule, fmt::format("smallest eigenvalue {} is negative", eig.eigenvalues().minCoeff()));
  }
}

CorrelationMatrix CorrelationMatrix::identity(std::size_t m) {
  return CorrelationMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m)));
}

CorrelationMatrix CorrelationMatrix::equicorrelated(std::size_t m, double rho) {
  const auto mm = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(mm, mm, rho);
  r.diagonal().setOnes();
  return CorrelationMatrix(std::move(r));
}

CorrelationMatrix CorrelationMatrix::from_covariance(const Eigen::MatrixXd& covariance) {
  const Eigen::VectorXd d = covariance.diagonal();
  if ((d.array() <= 0).any() || !d.allFinite()) {
    throw Error(ErrorCode::ZeroSe, kModule, "a statistic has zero or undefined variance");
  }
  const Eigen::VectorXd inv = d.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd r = inv.asDiagonal() * covariance * inv.asDiagonal();
  r = 0.5 * (r + r.transpose());
  r.diagonal().setOnes();
  r = r.cwiseMax(-1.0).cwiseMin(1.0);
  return CorrelationMatrix(std::move(r));
}

ProbResult mvn_rect_prob(std::span<const double> lower, std::span<const double> upper, const CorrelationMatrix& corr,
                         std::uint64_t seed, const MvtOptions& options) {
  return rect_prob(lower, upper, corr, kInf, seed, options);
}

ProbResult mvt_rect_prob(std::span<const double> lower, std::span<const double> upper, const CorrelationMatrix& corr,
                         double df, std::uint64_t seed, const MvtOptions& options) {
  return rect_prob(lower, upper, corr, df, seed, options);
}

QuantileResult equicoordinate_quantile(const CorrelationMatrix& corr, double df, double level, Tail tail,
                                       std::uint64_t seed, const MvtOptions& options) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::InvalidLevel, kModule, fmt::format("level {} is outside (0, 1)", level));
  }
  const std::size_t m = corr.dim();
  const auto univariate = [&](double p) { return student_t_quantile(p, df); };
  QuantileResult out;
  if (m == 1) {
    out.q = tail == Tail::one_sided ? univariate(level) : univariate(0.5 * (1.0 + level));
    out.achieved = level;
    return out;
  }

  const auto bounds_at = [&](double q, std::vector<double>& lo, std::vector<double>& hi) {
    lo.assign(m, tail == Tail::one_sided ? -kInf : -q);
    hi.assign(m, q);
  };
  double q_lo = tail == Tail::one_sided ? univariate(level) : univariate(0.5 * (1.0 + level));
  double q_hi = tail == Tail::one_sided ? univariate(1.0 - (1.0 - level) / static_cast<double>(m))
                                        : univariate(1.0 - (1.0 - level) / (2.0 * static_cast<double>(m)));
  if (tail == Tail::two_sided) q_lo = std::max(q_lo, 1e-8);

  // Fix the lattice size at the Bonferroni end so every evaluation shares the
  // same points and the probability is a smooth deterministic function of q.
  std::vector<double> lo;
  std::vector<double> hi;
  bounds_at(q_hi, lo, hi);
  const ProbResult sizing = rect_prob(lo, hi, corr, df, seed, options);
  const std::int64_t points = std::max<std::int64_t>(sizing.points_used, options.initial_points * 2) /
                              std::max(2, options.randomizations);
  double last_error = sizing.mc_error;
  const auto f = [&](double q) {
    bounds_at(q, lo, hi);
    const ProbResult r = rect_prob(lo, hi, corr, df, seed, options, points);
    last_error = r.mc_error;
    return r.value - level;
  };

  double f_lo = f(q_lo);
  double f_hi = f(q_hi);
  int expand = 0;
  while (f_lo > 0 && expand < 50) {
    q_lo = tail == Tail::two_sided ? 0.5 * q_lo : q_lo - 0.5 * std::max(1.0, std::abs(q_lo));
    f_lo = f(q_lo);
    ++expand;
  }
  while (f_hi < 0 && expand < 100) {
    q_hi += 0.5;
    f_hi = f(q_hi);
    ++expand;
  }
  if (f_lo > 0 || f_hi < 0) {
    throw Error(ErrorCode::NoConvergence, kModule, "could not bracket the equicoordinate quantile");
  }

  std::uintmax_t max_iter = 200;
  const auto tolerance = [](double a, double b) { return std::abs(b - a) < 1e-7; };
  const auto [a, b] = boost::math::tools::toms748_solve(f, q_lo, q_hi, f_lo, f_hi, tolerance, max_iter);
  if (max_iter >= 200 && !tolerance(a, b)) {
    throw Error(ErrorCode::NoConvergence, kModule, "equicoordinate quantile did not converge in 200 steps");
  }
  out.q = 0.5 * (a + b);
  out.achieved = f(out.q) + level;
  out.mc_error = last_error;
  out.iterations = static_cast<int>(max_iter) + expand;
  return out;
}

QuantileResult QuantileCache::get(const CorrelationMatrix& corr, double df, double level, Tail tail,
                                  std::uint64_t seed, const MvtOptions& options) {
  std::vector<std::int64_t> key;
  const std::size_t m = corr.dim();
  key.reserve(m * (m - 1) / 2 + 4);
  key.push_back(static_cast<std::int64_t>(m));
  key.push_back(std::isfinite(df) ? std::llround(df * 1e6) : std::numeric_limits<std::int64_t>::max());
  key.push_back(std::llround(level * 1e12));
  key.push_back(tail == Tail::one_sided ? 1 : 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) key.push_back(std::llround(corr(i, j) * 1e9));
  }
  {
    std::lock_guard lock(mutex_);
    if (const auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  const QuantileResult value = equicoordinate_quantile(corr, df, level, tail, seed, options);
  std::lock_guard lock(mutex_);
  return entries_.emplace(std::move(key), value).first->second;
}

std::size_t QuantileCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace dosetrend
