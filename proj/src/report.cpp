#include "dosetrend/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "dosetrend/error.hpp"
#include "dosetrend/random.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "cli";

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, kModule, fmt::format("{}: '{}' is not a number", key, value));
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, kModule, fmt::format("{}: '{}' is not an integer", key, value));
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "yes" || value == "1" || value == "on") return true;
  if (value == "false" || value == "no" || value == "0" || value == "off") return false;
  throw Error(ErrorCode::InvalidConfig, kModule, fmt::format("{}: '{}' is not a boolean", key, value));
}

std::string direction_name(DirectionSetting d) {
  switch (d) {
    case DirectionSetting::increasing: return "increasing";
    case DirectionSetting::decreasing: return "decreasing";
    case DirectionSetting::automatic: return "auto";
  }
  return "?";
}

std::uint64_t family_seed(std::uint64_t seed, const std::string& name) { return mix_seed(seed, fnv1a(name)); }

MvtOptions mvt_options(const AnalysisConfig& config) {
  MvtOptions o;
  o.max_points = config.mvt_points;
  return o;
}

Alternative alternative_for(Direction d) { return d == Direction::increasing ? Alternative::greater : Alternative::less; }

struct FittedCellMeans {
  ValidatedDesign design;
  CoefficientEstimates model;
  Direction direction = Direction::increasing;
};

FittedCellMeans fit_for(const DoseResponseTable& table, const AnalysisConfig& config) {
  FittedCellMeans f;
  f.design = validate(table);
  f.model = with_covariance(fit_cell_means(f.design, table), config.effective_covariance());
  switch (config.direction) {
    case DirectionSetting::increasing: f.direction = Direction::increasing; break;
    case DirectionSetting::decreasing: f.direction = Direction::decreasing; break;
    case DirectionSetting::automatic:
      f.direction = infer_direction(contrast_estimates(f.model, williams_matrix(f.design).coefficients));
      break;
  }
  return f;
}

MctOptions simultaneous_options(const AnalysisConfig& config, const std::string& name) {
  MctOptions o;
  o.level = 1.0 - config.alpha;
  o.alpha = config.alpha;
  o.seed = family_seed(config.seed, name);
  o.mvt = mvt_options(config);
  return o;
}

// Williams decision family, pairwise anti-Bonferroni family, unadjusted pairwise p, verdict and patterns.
void add_decision(AnalysisResult& result, const FittedCellMeans& f, const AnalysisConfig& config) {
  const Alternative alt = alternative_for(f.direction);
  result.williams_decision = run_mct(f.model, williams_matrix(f.design).with_alternative(alt),
                                     simultaneous_options(config, "williams"));
  MctOptions marginal = simultaneous_options(config, "dunnett_marginal");
  marginal.interval_kind = IntervalKind::marginal_anti_bonferroni;
  result.dunnett_marginal =
      run_mct(f.model, dunnett_matrix(f.design).with_alternative(Alternative::two_sided), marginal);
  const MctResult dunnett = run_mct(f.model, dunnett_matrix(f.design).with_alternative(alt),
                                    simultaneous_options(config, "dunnett"));
  result.pairwise_unadjusted_p.clear();
  for (const auto& row : dunnett.rows) result.pairwise_unadjusted_p.push_back(row.p_unadjusted);
  result.verdict = decide_trend(*result.williams_decision, *result.dunnett_marginal, result.pairwise_unadjusted_p,
                                config.eta.value_or(0.0), config.alpha);
  result.top_only = detect_top_only(dunnett, config.alpha);
  const MctResult sequential = run_mct(f.model, sequential_matrix(f.design).with_alternative(alt),
                                       simultaneous_options(config, "sequential"));
  result.plateau = detect_plateau(*result.williams_decision, sequential, config.alpha);
}

TukeyResult run_tukey(const ValidatedDesign& design, const DoseResponseTable& table, const AnalysisConfig& config) {
  TukeyResult t;
  std::vector<ScoringColumn> columns;
  for (const auto kind : {ScoringKind::arithmetic, ScoringKind::ordinal, ScoringKind::log_with_s0}) {
    t.scorings.push_back(dose_scores(design, kind));
    columns.push_back({to_string(kind), t.scorings.back().scores});
  }
  t.fit = fit_mmm(design, table, columns);
  const CoefficientEstimates slopes = t.fit.slope_estimates();
  Direction direction = Direction::increasing;
  if (config.direction == DirectionSetting::decreasing) direction = Direction::decreasing;
  if (config.direction == DirectionSetting::automatic) {
    const auto id = Eigen::MatrixXd::Identity(slopes.coefficients.size(), slopes.coefficients.size());
    direction = infer_direction(contrast_estimates(slopes, id));
  }
  ContrastSet set;
  set.family_name = "tukey_regression";
  set.coefficients = Eigen::MatrixXd::Identity(slopes.coefficients.size(), slopes.coefficients.size());
  set.labels = t.fit.model_tags;
  set.alternative = alternative_for(direction);
  t.mct = run_mct(slopes, set, simultaneous_options(config, "tukey_regression"));
  return t;
}

nlohmann::ordered_json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

nlohmann::ordered_json mct_json(const MctResult& r, bool ratio) {
  nlohmann::ordered_json j;
  j["family"] = r.family;
  j["alternative"] = to_string(r.alternative);
  j["interval_kind"] = to_string(r.interval_kind);
  j["level"] = r.level;
  j["critical_value"] = r.critical_value;
  j["df"] = number(r.df);
  j["p_mc_error"] = r.p_mc_error;
  j["scale"] = r.scale == LinkScale::logit ? "logit" : "identity";
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json o;
    o["label"] = row.label;
    o["estimate"] = row.estimate;
    o["se"] = row.se;
    o["t"] = row.t;
    o["p_adjusted"] = number(row.p_adjusted);
    o["p_unadjusted"] = number(row.p_unadjusted);
    o["lower"] = number(row.lower);
    o["upper"] = number(row.upper);
    if (ratio) {
      o["ratio_estimate"] = std::exp(row.estimate);
      o["ratio_lower"] = number(std::exp(row.lower));
      o["ratio_upper"] = number(std::exp(row.upper));
    }
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  auto corr = nlohmann::ordered_json::array();
  for (Eigen::Index a = 0; a < r.corr.rows(); ++a) {
    auto line = nlohmann::ordered_json::array();
    for (Eigen::Index b = 0; b < r.corr.cols(); ++b) line.push_back(r.corr(a, b));
    corr.push_back(std::move(line));
  }
  j["corr"] = std::move(corr);
  return j;
}

std::string limit(double v) {
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  return fmt::format("{:.4f}", v);
}

std::string interval_table(const MctResult& r, bool ratio) {
  std::size_t width = 8;
  for (const auto& row : r.rows) width = std::max(width, row.label.size());
  std::string out = fmt::format("{:>{}} {:>10} {:>10} {:>10}\n", "Contrast", width, ratio ? "Ratio" : "Estimate",
                                "lower", "upper");
  for (const auto& row : r.rows) {
    const double e = ratio ? std::exp(row.estimate) : row.estimate;
    const double lo = ratio ? std::exp(row.lower) : row.lower;
    const double hi = ratio ? std::exp(row.upper) : row.upper;
    out += fmt::format("{:>{}} {:>10.4f} {:>10} {:>10}\n", row.label, width, e, limit(lo), limit(hi));
  }
  return out;
}

std::string family_heading(const MctResult& r) {
  return fmt::format("{} contrasts ({}, {} {} intervals at level {:.4f}, df {})", r.family, to_string(r.alternative),
                     to_string(r.interval_kind), r.alternative == Alternative::two_sided ? "two-sided" : "one-sided",
                     r.level, std::isfinite(r.df) ? fmt::format("{:g}", r.df) : std::string("Inf"));
}

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

}  // namespace

std::string to_string(Family family) {
  switch (family) {
    case Family::dunnett: return "dunnett";
    case Family::williams: return "williams";
    case Family::changepoint: return "changepoint";
    case Family::sequential: return "sequential";
    case Family::joint_dw: return "joint_dw";
    case Family::tukey_regression: return "tukey_regression";
  }
  return "?";
}

Family parse_family(const std::string& text) {
  for (const auto f : {Family::dunnett, Family::williams, Family::changepoint, Family::sequential, Family::joint_dw,
                       Family::tukey_regression}) {
    if (text == to_string(f)) return f;
  }
  if (text == "tukey") return Family::tukey_regression;
  throw Error(ErrorCode::InvalidConfig, kModule, "unknown family '" + text + "'");
}

CovarianceEstimator AnalysisConfig::effective_covariance() const {
  if (covariance) return *covariance;
  return schema.endpoint == EndpointKind::continuous ? CovarianceEstimator::HC0 : CovarianceEstimator::model_based;
}

bool AnalysisConfig::effective_ratio_scale() const {
  return ratio_scale.value_or(schema.endpoint == EndpointKind::binomial) && schema.endpoint == EndpointKind::binomial;
}

void AnalysisConfig::check() const {
  if (!(alpha > 0 && alpha < 0.5)) throw Error(ErrorCode::InvalidConfig, kModule, fmt::format("alpha {} outside (0, 0.5)", alpha));
  if (families.empty()) throw Error(ErrorCode::InvalidConfig, kModule, "at least one contrast family is required");
  if (eta && (*eta < 0 || std::isnan(*eta))) throw Error(ErrorCode::NegativeEta, kModule, "eta must be nonnegative");
  if (mvt_points < 1000) throw Error(ErrorCode::InvalidConfig, kModule, "mvt_points must be at least 1000");
}

std::string AnalysisConfig::canonical() const {
  std::vector<std::string> fams;
  for (const auto f : families) fams.push_back(to_string(f));
  std::string out;
  out += fmt::format("alpha = {:.17g}\n", alpha);
  out += fmt::format("covariance = {}\n", to_string(effective_covariance()));
  out += fmt::format("direction = {}\n", direction_name(direction));
  out += fmt::format("dose_col = {}\n", schema.dose);
  out += fmt::format("endpoint = {}\n", to_string(schema.endpoint));
  out += fmt::format("eta = {}\n", eta ? fmt::format("{:.17g}", *eta) : std::string("posthoc"));
  out += fmt::format("failures_col = {}\n", schema.failures);
  out += fmt::format("families = {}\n", fmt::join(fams, ","));
  out += fmt::format("group_col = {}\n", schema.group);
  out += fmt::format("mvt_points = {}\n", mvt_points);
  out += fmt::format("ratio_scale = {}\n", effective_ratio_scale());
  out += fmt::format("response_col = {}\n", schema.response);
  out += fmt::format("seed = {}\n", seed);
  out += fmt::format("successes_col = {}\n", schema.successes);
  out += fmt::format("trials_col = {}\n", schema.trials);
  return out;
}

void set_config_value(AnalysisConfig& config, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string value = trim(raw_value);
  if (key == "endpoint") {
    if (value == "continuous") config.schema.endpoint = EndpointKind::continuous;
    else if (value == "binomial") config.schema.endpoint = EndpointKind::binomial;
    else throw Error(ErrorCode::InvalidConfig, kModule, "endpoint must be continuous or binomial");
  } else if (key == "dose_col") {
    config.schema.dose = value;
  } else if (key == "group_col") {
    config.schema.group = value;
  } else if (key == "response_col") {
    config.schema.response = value;
  } else if (key == "successes_col") {
    config.schema.successes = value;
  } else if (key == "failures_col") {
    config.schema.failures = value;
  } else if (key == "trials_col") {
    config.schema.trials = value;
  } else if (key == "families" || key == "family") {
    config.families.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) config.families.push_back(parse_family(item));
    }
  } else if (key == "covariance") {
    config.covariance = parse_covariance_estimator(value);
  } else if (key == "alpha") {
    config.alpha = parse_double(key, value);
  } else if (key == "eta") {
    if (value == "posthoc" || value.empty()) config.eta.reset();
    else config.eta = parse_double(key, value);
  } else if (key == "direction") {
    if (value == "increasing") config.direction = DirectionSetting::increasing;
    else if (value == "decreasing") config.direction = DirectionSetting::decreasing;
    else if (value == "auto") config.direction = DirectionSetting::automatic;
    else throw Error(ErrorCode::InvalidConfig, kModule, "direction must be increasing, decreasing or auto");
  } else if (key == "seed") {
    config.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "mvt_points") {
    config.mvt_points = parse_int(key, value);
  } else if (key == "ratio_scale") {
    config.ratio_scale = parse_bool(key, value);
  } else {
    throw Error(ErrorCode::InvalidConfig, kModule, "unknown configuration key '" + key + "'");
  }
}

void apply_config_text(AnalysisConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, kModule, fmt::format("line {}: expected key = value", line_no));
    }
    set_config_value(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

AnalysisResult analyze(const DoseResponseTable& table, const AnalysisConfig& config) {
  config.check();
  const FittedCellMeans f = fit_for(table, config);
  AnalysisResult result;
  result.design = f.design;
  result.summaries = group_summaries(f.design, table);
  result.covariance = config.effective_covariance();
  const Alternative alt = alternative_for(f.direction);
  for (const auto family : config.families) {
    if (family == Family::tukey_regression) {
      result.tukey = run_tukey(f.design, table, config);
      continue;
    }
    const std::string name = to_string(family);
    result.families.push_back(
        run_mct(f.model, contrasts_by_name(name, f.design).with_alternative(alt), simultaneous_options(config, name)));
  }
  add_decision(result, f, config);
  return result;
}

AnalysisResult trend_report(const DoseResponseTable& table, const AnalysisConfig& config) {
  config.check();
  const FittedCellMeans f = fit_for(table, config);
  AnalysisResult result;
  result.design = f.design;
  result.summaries = group_summaries(f.design, table);
  result.covariance = config.effective_covariance();
  add_decision(result, f, config);
  return result;
}

AnalysisResult tukey_report(const DoseResponseTable& table, const AnalysisConfig& config) {
  config.check();
  AnalysisResult result;
  result.design = validate(table);
  result.summaries = group_summaries(result.design, table);
  result.covariance = CovarianceEstimator::HC0;
  result.tukey = run_tukey(result.design, table, config);
  return result;
}

nlohmann::ordered_json report_json(const AnalysisResult& result, const AnalysisConfig& config,
                                   const Provenance& provenance) {
  const bool ratio = config.effective_ratio_scale();
  nlohmann::ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["tool"] = "dosetrend";
  j["command"] = provenance.command;

  nlohmann::ordered_json cfg;
  std::vector<std::string> fams;
  for (const auto f : config.families) fams.push_back(to_string(f));
  cfg["endpoint"] = to_string(config.schema.endpoint);
  cfg["families"] = fams;
  cfg["covariance"] = to_string(config.effective_covariance());
  cfg["alpha"] = config.alpha;
  cfg["eta"] = config.eta ? nlohmann::ordered_json(*config.eta) : nlohmann::ordered_json("posthoc");
  cfg["direction"] = direction_name(config.direction);
  cfg["ratio_scale"] = ratio;
  cfg["mvt_points"] = config.mvt_points;
  j["config"] = std::move(cfg);

  nlohmann::ordered_json prov;
  prov["version"] = kVersion;
  prov["seed"] = config.seed;
  prov["config_hash"] = hex(provenance.config_hash);
  prov["data"] = provenance.data_name;
  prov["data_hash"] = hex(provenance.data_hash);
  j["provenance"] = std::move(prov);

  nlohmann::ordered_json design;
  design["endpoint"] = to_string(result.design.endpoint);
  design["control_index"] = 0;
  design["k"] = result.design.k();
  auto groups = nlohmann::ordered_json::array();
  for (const auto& s : result.summaries) {
    nlohmann::ordered_json g;
    g["label"] = s.label;
    g["dose"] = s.dose;
    g["n"] = s.n;
    if (result.design.endpoint == EndpointKind::continuous) {
      g["mean"] = s.mean;
      g["sd"] = number(s.sd);
    } else {
      g["successes"] = s.successes;
      g["proportion"] = s.mean;
    }
    groups.push_back(std::move(g));
  }
  design["groups"] = std::move(groups);
  j["design"] = std::move(design);
  j["covariance"] = to_string(result.covariance);

  auto fams_json = nlohmann::ordered_json::array();
  for (const auto& f : result.families) fams_json.push_back(mct_json(f, ratio));
  j["families"] = std::move(fams_json);

  if (result.verdict) {
    const auto& v = *result.verdict;
    nlohmann::ordered_json decision;
    decision["williams"] = mct_json(*result.williams_decision, ratio);
    decision["dunnett_marginal"] = mct_json(*result.dunnett_marginal, ratio);
    decision["pairwise_unadjusted_p"] = result.pairwise_unadjusted_p;
    j["decision"] = std::move(decision);

    nlohmann::ordered_json vj;
    vj["claim"] = to_string(v.claim);
    vj["direction"] = to_string(v.direction);
    vj["eta"] = v.eta;
    vj["alpha"] = v.alpha;
    vj["minimal_eta"] = v.minimal_eta ? nlohmann::ordered_json(*v.minimal_eta) : nlohmann::ordered_json(nullptr);
    vj["strict_at_zero"] = v.strict_zero;
    vj["supporting"] = v.supporting;
    vj["violating"] = v.violating;
    vj["ambiguous"] = v.ambiguous;
    vj["notes"] = v.notes;
    nlohmann::ordered_json ctp;
    ctp["absolute"] = v.ctp.absolute;
    ctp["rejected"] = v.ctp.rejected;
    ctp["stopped_at"] = v.ctp.stopped_at ? nlohmann::ordered_json(*v.ctp.stopped_at) : nlohmann::ordered_json(nullptr);
    ctp["p_ordered"] = v.ctp.p_ordered;
    vj["ctp"] = std::move(ctp);
    j["verdict"] = std::move(vj);

    nlohmann::ordered_json patterns;
    patterns["top_only"] = {{"flagged", result.top_only.flagged}, {"pattern", result.top_only.pattern}};
    patterns["plateau"] = {{"flagged", result.plateau.flagged}, {"pattern", result.plateau.pattern}};
    j["patterns"] = std::move(patterns);
  }

  if (result.tukey) {
    const auto& t = *result.tukey;
    nlohmann::ordered_json tj;
    auto scorings = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < t.scorings.size(); ++i) {
      nlohmann::ordered_json s;
      s["kind"] = to_string(t.scorings[i].kind);
      s["scores"] = t.scorings[i].scores;
      const auto& m = t.fit.models[i];
      s["intercept"] = m.coefficients[0];
      s["slope"] = m.coefficients[1];
      scorings.push_back(std::move(s));
    }
    tj["scorings"] = std::move(scorings);
    tj["mct"] = mct_json(t.mct, false);
    double min_p = 1.0;
    for (const auto& row : t.mct.rows) min_p = std::min(min_p, row.p_adjusted);
    tj["joint_p"] = min_p;
    j["tukey"] = std::move(tj);
  }
  return j;
}

std::string verdict_text(const TrendVerdict& v, const ValidatedDesign& design) {
  std::string out;
  out += fmt::format("Claim: {} ({})\n", to_string(v.claim), to_string(v.direction));
  if (v.claim == Claim::strict || v.claim == Claim::absolute) {
    out += fmt::format("Strict monotonic trend holds at eta = {:.4f}\n", v.eta);
  } else if (v.claim == Claim::common_global) {
    out += fmt::format("Common trend only; not strict at eta = {:.4f}\n", v.eta);
  }
  if (!v.supporting.empty()) out += fmt::format("Supporting Williams contrasts: {}\n", fmt::join(v.supporting, ", "));
  if (!v.violating.empty()) {
    out += fmt::format("Non-inferiority fails at eta = {:.4f} for: {}\n", v.eta, fmt::join(v.violating, ", "));
  }
  if (v.minimal_eta) {
    out += fmt::format("Minimal eta (post hoc): {:.4f} {}\n", *v.minimal_eta,
                       design.endpoint == EndpointKind::binomial ? "(log-odds units)" : "(response units)");
  }
  std::vector<std::string> chain;
  for (const auto d : v.ctp.rejected) chain.push_back(fmt::format("{} - 0", d));
  out += fmt::format("Closed-testing chain: {}{}\n", v.ctp.absolute ? "all pairwise hypotheses rejected" : "stopped",
                     chain.empty() ? std::string() : fmt::format(" (rejected: {})", fmt::join(chain, ", ")));
  if (v.ctp.stopped_at) out += fmt::format("  chain stopped at {} - 0\n", *v.ctp.stopped_at);
  if (v.ctp.absolute) out += fmt::format("  p-values ordered by dose: {}\n", v.ctp.p_ordered ? "yes" : "no");
  if (v.ambiguous) out += "Ambiguous: a deciding p-value lies within 1e-3 of alpha\n";
  for (const auto& n : v.notes) out += "Note: " + n + "\n";
  return out;
}

std::string report_text(const AnalysisResult& result, const AnalysisConfig& config) {
  const bool ratio = config.effective_ratio_scale();
  std::string out = fmt::format("dosetrend {}\n\n", kVersion);
  out += fmt::format("Endpoint: {}; covariance: {}; alpha: {}\n\n", to_string(result.design.endpoint),
                     to_string(result.covariance), config.alpha);
  out += "Groups\n";
  out += fmt::format("{:>6} {:>12} {:>12} {:>8} {:>12} {:>12}\n", "index", "label", "dose", "n",
                     result.design.endpoint == EndpointKind::binomial ? "proportion" : "mean", "sd");
  for (std::size_t i = 0; i < result.summaries.size(); ++i) {
    const auto& s = result.summaries[i];
    out += fmt::format("{:>6} {:>12} {:>12g} {:>8} {:>12.4f} {:>12}\n", i, s.label, s.dose, s.n, s.mean,
                       std::isnan(s.sd) ? std::string("NA") : fmt::format("{:.4f}", s.sd));
  }
  for (const auto& f : result.families) {
    out += "\n" + family_heading(f) + "\n" + format_mct_table(f) + interval_table(f, ratio);
  }
  if (result.verdict) {
    out += "\nTrend decision\n";
    out += family_heading(*result.williams_decision) + "\n" + format_mct_table(*result.williams_decision) +
           interval_table(*result.williams_decision, ratio);
    out += family_heading(*result.dunnett_marginal) + "\n" + interval_table(*result.dunnett_marginal, ratio);
    out += "Unadjusted one-sided pairwise p:";
    for (std::size_t i = 0; i < result.pairwise_unadjusted_p.size(); ++i) {
      out += fmt::format(" {} - 0: {}", i + 1, format_p(result.pairwise_unadjusted_p[i]));
    }
    out += "\n\n" + verdict_text(*result.verdict, result.design);
    if (result.top_only.flagged) out += "Pattern: " + result.top_only.pattern + "\n";
    if (result.plateau.flagged) out += "Pattern: " + result.plateau.pattern + "\n";
  }
  if (result.tukey) {
    const auto& t = *result.tukey;
    out += "\nTukey trend regression (joint max-t over dose scorings)\n";
    for (std::size_t i = 0; i < t.scorings.size(); ++i) {
      std::vector<std::string> s;
      for (const double v : t.scorings[i].scores) s.push_back(fmt::format("{:.6g}", v));
      out += fmt::format("  {} scores: {}\n", to_string(t.scorings[i].kind), fmt::join(s, ", "));
    }
    out += family_heading(t.mct) + "\n" + format_mct_table(t.mct);
  }
  return out;
}

std::string intervals_csv(const AnalysisResult& result, const AnalysisConfig& config) {
  const bool ratio = config.effective_ratio_scale();
  std::string out = "family,label,lower,estimate,upper,scale\n";
  const auto emit = [&](const std::string& tag, const MctResult& r) {
    for (const auto& row : r.rows) {
      const double e = ratio ? std::exp(row.estimate) : row.estimate;
      const double lo = ratio ? std::exp(row.lower) : row.lower;
      const double hi = ratio ? std::exp(row.upper) : row.upper;
      out += fmt::format("{},{},{},{},{},{}\n", tag, row.label, limit(lo), fmt::format("{:.4f}", e), limit(hi),
                         ratio ? "ratio" : (r.scale == LinkScale::logit ? "logit" : "response"));
    }
  };
  if (result.williams_decision) emit("W", *result.williams_decision);
  if (result.dunnett_marginal) emit("U", *result.dunnett_marginal);
  for (const auto& f : result.families) emit(f.family, f);
  return out;
}

}  // namespace dosetrend
