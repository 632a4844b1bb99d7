#include "dosetrend/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "dosetrend/contrasts.hpp"
#include "dosetrend/error.hpp"
#include "dosetrend/mct.hpp"
#include "dosetrend/random.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "simulate";

enum Counter : std::size_t {
  kCommon,
  kStrictEta,
  kStrictZero,
  kAbsolute,
  kCtpChain,
  kTopOnly,
  kPlateau,
  kFitFailure,
  kCounterCount
};

constexpr std::array<const char*, kFitFailure> kClaimNames = {
    "common_global", "strict_eta", "strict_0", "absolute", "ctp_chain", "top_only", "plateau"};

using Counts = std::array<std::int64_t, kCounterCount>;

Counts run_replicate(const Scenario& scenario, const SimulationOptions& options, std::int64_t rep,
                     QuantileCache& cache) {
  Counts counts{};
  const DoseResponseTable table = generate(scenario, static_cast<std::uint64_t>(rep));
  const ValidatedDesign design = validate(table);
  CoefficientEstimates model;
  try {
    model = with_covariance(fit_cell_means(design, table), options.covariance);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SeparationDetected || e.code() == ErrorCode::NoConvergence ||
        e.code() == ErrorCode::DegenerateCounts || e.code() == ErrorCode::ZeroResidualDf) {
      counts[kFitFailure] = 1;
      return counts;
    }
    throw;
  }

  const Alternative alt = options.direction == Direction::increasing ? Alternative::greater : Alternative::less;
  MctOptions simultaneous;
  simultaneous.level = 1.0 - options.alpha;
  simultaneous.alpha = options.alpha;
  simultaneous.compute_adjusted_p = false;
  simultaneous.seed = options.seed;
  simultaneous.mvt = options.mvt;
  simultaneous.cache = &cache;
  MctOptions marginal = simultaneous;
  marginal.interval_kind = IntervalKind::marginal_anti_bonferroni;

  MctResult williams;
  MctResult dunnett;
  MctResult dunnett_marginal;
  MctResult sequential;
  try {
    williams = run_mct(model, williams_matrix(design).with_alternative(alt), simultaneous);
    dunnett = run_mct(model, dunnett_matrix(design).with_alternative(alt), simultaneous);
    dunnett_marginal = run_mct(model, dunnett_matrix(design).with_alternative(Alternative::two_sided), marginal);
    sequential = run_mct(model, sequential_matrix(design).with_alternative(alt), simultaneous);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroSe) throw;
    counts[kFitFailure] = 1;
    return counts;
  }

  std::vector<double> p_raw;
  for (const auto& row : dunnett.rows) p_raw.push_back(row.p_unadjusted);
  const TrendVerdict v = decide_trend(williams, dunnett_marginal, p_raw, options.eta, options.alpha);
  counts[kCommon] = v.claim >= Claim::common_global;
  counts[kStrictEta] = v.claim >= Claim::strict;
  counts[kStrictZero] = v.claim >= Claim::common_global && v.strict_zero;
  counts[kAbsolute] = v.claim == Claim::absolute;
  counts[kCtpChain] = v.ctp.absolute;
  counts[kTopOnly] = detect_top_only(dunnett, options.alpha).flagged;
  counts[kPlateau] = detect_plateau(williams, sequential, options.alpha).flagged;
  return counts;
}

}  // namespace

std::string to_string(ShapeTag tag) {
  switch (tag) {
    case ShapeTag::flat: return "flat";
    case ShapeTag::linear: return "linear";
    case ShapeTag::plateau: return "plateau";
    case ShapeTag::top_only: return "top_only";
    case ShapeTag::low_dose_reversal: return "low_dose_reversal";
    case ShapeTag::custom: return "custom";
  }
  return "?";
}

ShapeTag parse_shape(const std::string& text) {
  for (const auto tag : {ShapeTag::flat, ShapeTag::linear, ShapeTag::plateau, ShapeTag::top_only,
                         ShapeTag::low_dose_reversal, ShapeTag::custom}) {
    if (text == to_string(tag)) return tag;
  }
  throw Error(ErrorCode::InvalidConfig, kModule, "unknown shape '" + text + "'");
}

void check_scenario(const Scenario& s) {
  const std::size_t g = s.profile.size();
  if (g < 2) throw Error(ErrorCode::InvalidConfig, kModule, "a scenario needs at least two groups");
  if (s.n.size() != g || (!s.doses.empty() && s.doses.size() != g) ||
      (s.endpoint == EndpointKind::continuous && s.sigma.size() != g)) {
    throw Error(ErrorCode::DimensionMismatch, kModule, "profile, n, sigma and doses must have one entry per group");
  }
  for (std::size_t i = 0; i < g; ++i) {
    if (s.n[i] < 0) throw Error(ErrorCode::InvalidConfig, kModule, "group sizes must be nonnegative");
    if (s.endpoint == EndpointKind::continuous) {
      if (!(s.sigma[i] > 0)) throw Error(ErrorCode::InvalidConfig, kModule, "sigma must be positive");
      if (!std::isfinite(s.profile[i])) throw Error(ErrorCode::InvalidConfig, kModule, "means must be finite");
    } else if (!(s.profile[i] > 0 && s.profile[i] < 1)) {
      throw Error(ErrorCode::InvalidConfig, kModule, "proportions must lie in (0, 1)");
    }
  }
}

Scenario preset_scenario(ShapeTag tag, std::uint64_t seed) {
  Scenario s;
  s.shape = tag;
  s.seed = seed;
  switch (tag) {
    case ShapeTag::flat: s.profile = {0, 0, 0, 0}; break;
    case ShapeTag::linear: s.profile = {0, 1, 2, 3}; break;
    case ShapeTag::plateau: s.profile = {0, 2, 2, 2}; break;
    case ShapeTag::top_only: s.profile = {0, 0, 0, 3}; break;
    case ShapeTag::low_dose_reversal: s.profile = {0, -1, -0.5, 2.5}; break;
    case ShapeTag::custom: throw Error(ErrorCode::InvalidConfig, kModule, "custom scenarios have no preset");
  }
  s.sigma.assign(s.profile.size(), 1.0);
  s.n.assign(s.profile.size(), 20);
  s.doses = {0, 1, 2, 3};
  return s;
}

DoseResponseTable generate(const Scenario& scenario, std::uint64_t replicate) {
  check_scenario(scenario);
  Philox4x32 rng(scenario.seed, replicate);
  DoseResponseTable table;
  table.endpoint = scenario.endpoint;
  for (std::size_t i = 0; i < scenario.profile.size(); ++i) {
    const double dose = scenario.doses.empty() ? static_cast<double>(i) : scenario.doses[i];
    const std::string label = fmt::format("{:g}", dose);
    if (scenario.endpoint == EndpointKind::continuous) {
      std::normal_distribution<double> normal(scenario.profile[i], scenario.sigma[i]);
      for (std::int64_t r = 0; r < scenario.n[i]; ++r) {
        Observation obs;
        obs.group_label = label;
        obs.dose = dose;
        obs.response = normal(rng);
        table.rows.push_back(std::move(obs));
      }
    } else {
      std::binomial_distribution<std::int64_t> binomial(scenario.n[i], scenario.profile[i]);
      Observation obs;
      obs.group_label = label;
      obs.dose = dose;
      obs.successes = scenario.n[i] > 0 ? binomial(rng) : 0;
      obs.failures = scenario.n[i] - obs.successes;
      table.rows.push_back(std::move(obs));
    }
  }
  return table;
}

const ClaimRate& RateTable::at(const std::string& claim) const {
  for (const auto& r : rates) {
    if (r.claim == claim) return r;
  }
  throw Error(ErrorCode::InvalidConfig, kModule, "no rate for claim '" + claim + "'");
}

RateTable operating_characteristics(const Scenario& scenario, const SimulationOptions& options) {
  check_scenario(scenario);
  if (options.reps < 100) throw Error(ErrorCode::InvalidConfig, kModule, "need at least 100 replications");
  if (!(options.alpha > 0 && options.alpha < 0.5)) throw Error(ErrorCode::InvalidConfig, kModule, "alpha must lie in (0, 0.5)");
  if (options.eta < 0) throw Error(ErrorCode::NegativeEta, kModule, "eta must be nonnegative");

  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::int64_t>(threads, options.reps));
  QuantileCache cache;
  std::vector<Counts> partial(threads, Counts{});
  std::vector<std::exception_ptr> failures(threads);
  const auto worker = [&](unsigned id) {
    try {
      // Strided assignment; totals are exact integer sums, so order is irrelevant.
      for (std::int64_t rep = id; rep < options.reps; rep += threads) {
        const Counts c = run_replicate(scenario, options, rep, cache);
        for (std::size_t j = 0; j < kCounterCount; ++j) partial[id][j] += c[j];
      }
    } catch (...) {
      failures[id] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned id = 0; id < threads; ++id) pool.emplace_back(worker, id);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  Counts total{};
  for (const auto& c : partial) {
    for (std::size_t j = 0; j < kCounterCount; ++j) total[j] += c[j];
  }
  RateTable table;
  table.reps = options.reps;
  table.fit_failures = total[kFitFailure];
  const double reps = static_cast<double>(options.reps);
  for (std::size_t j = 0; j < kClaimNames.size(); ++j) {
    ClaimRate r;
    r.claim = kClaimNames[j];
    r.count = total[j];
    r.rate = static_cast<double>(total[j]) / reps;
    r.mc_se = std::sqrt(r.rate * (1.0 - r.rate) / reps);
    table.rates.push_back(std::move(r));
  }
  return table;
}

std::string format_rates_csv(const RateTable& table) {
  std::string out = "claim,count,reps,rate,mc_se\n";
  for (const auto& r : table.rates) {
    out += fmt::format("{},{},{},{:.6f},{:.6f}\n", r.claim, r.count, table.reps, r.rate, r.mc_se);
  }
  out += fmt::format("fit_failure,{},{},{:.6f},\n", table.fit_failures, table.reps,
                     static_cast<double>(table.fit_failures) / static_cast<double>(table.reps));
  return out;
}

}  // namespace dosetrend
