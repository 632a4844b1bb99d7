#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dosetrend/error.hpp"
#include "dosetrend/report.hpp"
#include "dosetrend/simulate.hpp"

namespace dosetrend {
namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cli", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// All outputs are rendered before anything is written; each file lands via rename.
void write_outputs(const std::string& dir, const std::vector<std::pair<std::string, std::string>>& files) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cli", "cannot create '" + dir + "': " + ec.message());
  for (const auto& [name, body] : files) {
    const fs::path target = fs::path(dir) / name;
    const fs::path tmp = fs::path(dir) / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::Io, "cli", "cannot write '" + tmp.string() + "'");
      out << body;
      if (!out) throw Error(ErrorCode::Io, "cli", "short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) throw Error(ErrorCode::Io, "cli", "cannot rename to '" + target.string() + "': " + ec.message());
  }
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "cli", fmt::format("--{}: '{}' is not a number", key, item));
    }
  }
  return out;
}

// Schema and analysis flags that map one-to-one onto configuration keys.
struct AnalysisFlags {
  std::string data;
  std::string config;
  std::string out_dir;
  std::string format = "txt";
  std::map<std::string, std::string> settings;

  void attach(CLI::App* cmd, bool with_families) {
    cmd->add_option("--data", data, "Input CSV (one row per unit or per dose group)")->required();
    cmd->add_option("--config", config, "key = value configuration file; flags override it");
    cmd->add_option("--out-dir", out_dir, "Write report.json, report.txt and intervals.csv here");
    cmd->add_option("--format", format, "Stdout format when --out-dir is absent")
        ->check(CLI::IsMember({"txt", "json", "both"}));
    const auto setting = [&](const std::string& flag, const std::string& key, const std::string& help) {
      cmd->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { settings[key] = v; }, help);
    };
    if (with_families) setting("--family", "families", "Comma-separated contrast families");
    setting("--alpha", "alpha", "Familywise error rate (default 0.05)");
    setting("--eta", "eta", "Non-inferiority margin, or 'posthoc'");
    setting("--direction", "direction", "increasing, decreasing or auto");
    setting("--covariance", "covariance", "model_based, HC0 or HC3");
    setting("--seed", "seed", "Seed for all randomized numerics");
    setting("--mvt-points", "mvt_points", "Lattice point cap for multivariate t probabilities");
    setting("--ratio-scale", "ratio_scale", "Report binomial contrasts as odds ratios (true/false)");
    setting("--endpoint", "endpoint", "continuous or binomial");
    setting("--dose-col", "dose_col", "Dose column name");
    setting("--group-col", "group_col", "Group label column name");
    setting("--response-col", "response_col", "Response column name");
    setting("--successes-col", "successes_col", "Successes column name");
    setting("--failures-col", "failures_col", "Failures column name");
    setting("--trials-col", "trials_col", "Trials column name");
  }

  AnalysisConfig build() const {
    AnalysisConfig cfg;
    if (!config.empty()) apply_config_text(cfg, read_file(config));
    for (const auto& [key, value] : settings) set_config_value(cfg, key, value);
    return cfg;
  }
};

struct SimulateFlags {
  std::string shape;
  std::string means;
  std::string sigma = "1";
  std::string n = "20";
  std::string doses;
  std::string endpoint = "continuous";
  std::int64_t reps = 1000;
  double alpha = 0.05;
  double eta = 0.0;
  std::string direction = "increasing";
  std::string covariance = "model_based";
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::int64_t mvt_points = 10'000'000;
  std::string out_dir;

  void attach(CLI::App* cmd) {
    cmd->add_option("--shape", shape, "Preset: flat, linear, plateau, top_only, low_dose_reversal");
    cmd->add_option("--means", means, "Comma-separated group means (or proportions for binomial)");
    cmd->add_option("--sigma", sigma, "Common sd or one per group");
    cmd->add_option("--n", n, "Common group size or one per group");
    cmd->add_option("--doses", doses, "Comma-separated doses (default 0..k)");
    cmd->add_option("--endpoint", endpoint, "continuous or binomial")->check(CLI::IsMember({"continuous", "binomial"}));
    cmd->add_option("--reps", reps, "Replications (at least 100)");
    cmd->add_option("--alpha", alpha, "Familywise error rate");
    cmd->add_option("--eta", eta, "Non-inferiority margin");
    cmd->add_option("--direction", direction, "increasing or decreasing");
    cmd->add_option("--covariance", covariance, "model_based, HC0 or HC3");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
    cmd->add_option("--mvt-points", mvt_points, "Lattice point cap for critical values");
    cmd->add_option("--out-dir", out_dir, "Write rates.csv here instead of stdout");
  }

  Scenario scenario() const {
    Scenario s;
    if (!shape.empty()) {
      if (!means.empty()) throw Error(ErrorCode::InvalidConfig, "cli", "--shape and --means are exclusive");
      s = preset_scenario(parse_shape(shape), seed);
    } else {
      if (means.empty()) throw Error(ErrorCode::InvalidConfig, "cli", "simulate needs --shape or --means");
      s.profile = parse_list("means", means);
      s.seed = seed;
      const std::size_t g = s.profile.size();
      const auto broadcast = [g](std::vector<double> v) {
        if (v.size() == 1) v.assign(g, v.front());
        return v;
      };
      s.sigma = broadcast(parse_list("sigma", sigma));
      for (const double v : broadcast(parse_list("n", n))) s.n.push_back(static_cast<std::int64_t>(v));
      if (!doses.empty()) s.doses = parse_list("doses", doses);
    }
    s.endpoint = endpoint == "binomial" ? EndpointKind::binomial : EndpointKind::continuous;
    if (s.endpoint == EndpointKind::binomial) s.sigma.clear();
    return s;
  }
};

std::string command_line(int argc, const char* const* argv) {
  std::vector<std::string> parts;
  for (int i = 1; i < argc; ++i) parts.emplace_back(argv[i]);
  return fmt::format("dosetrend {}", fmt::join(parts, " "));
}

enum class Mode { analyze, trend, tukey };

int run_analysis(Mode mode, const AnalysisFlags& flags, const std::string& command, std::ostream& out) {
  const AnalysisConfig config = flags.build();
  const std::string bytes = read_file(flags.data);
  std::istringstream in(bytes);
  const DoseResponseTable table = parse_dose_table(in, config.schema);
  AnalysisResult result;
  switch (mode) {
    case Mode::analyze: result = analyze(table, config); break;
    case Mode::trend: result = trend_report(table, config); break;
    case Mode::tukey: result = tukey_report(table, config); break;
  }
  Provenance prov;
  prov.command = command;
  prov.config_hash = fnv1a(config.canonical());
  prov.data_hash = fnv1a(bytes);
  prov.data_name = fs::path(flags.data).filename().string();

  const std::string json = report_json(result, config, prov).dump(2) + "\n";
  const std::string text = report_text(result, config);
  if (!flags.out_dir.empty()) {
    std::vector<std::pair<std::string, std::string>> files{{"report.json", json}, {"report.txt", text}};
    if (mode != Mode::tukey) files.emplace_back("intervals.csv", intervals_csv(result, config));
    write_outputs(flags.out_dir, files);
    if (result.verdict) out << verdict_text(*result.verdict, result.design);
    return 0;
  }
  if (flags.format != "json") out << text;
  if (flags.format == "both") out << "\n";
  if (flags.format != "txt") out << json;
  return 0;
}

int run_simulation(const SimulateFlags& flags, std::ostream& out) {
  SimulationOptions options;
  options.reps = flags.reps;
  options.alpha = flags.alpha;
  options.eta = flags.eta;
  options.direction = parse_direction(flags.direction);
  options.covariance = parse_covariance_estimator(flags.covariance);
  options.seed = flags.seed;
  options.threads = flags.threads;
  options.mvt.max_points = flags.mvt_points;
  const RateTable rates = operating_characteristics(flags.scenario(), options);
  const std::string csv = format_rates_csv(rates);
  if (!flags.out_dir.empty()) {
    write_outputs(flags.out_dir, {{"rates.csv", csv}});
  } else {
    out << csv;
  }
  return 0;
}

int run_contrasts(const AnalysisFlags& flags, const std::string& family, std::ostream& out) {
  const AnalysisConfig config = flags.build();
  const std::string bytes = read_file(flags.data);
  std::istringstream in(bytes);
  const ValidatedDesign design = validate(parse_dose_table(in, config.schema));
  const std::string name = family.empty() ? std::string("williams") : to_string(parse_family(family));
  out << format_contrast_matrix(contrasts_by_name(name, design), design);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiple contrast tests for monotonic dose-response trends", "dosetrend"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  AnalysisFlags analyze_flags;
  AnalysisFlags trend_flags;
  AnalysisFlags tukey_flags;
  AnalysisFlags contrast_flags;
  SimulateFlags sim_flags;
  std::string contrast_family;

  auto* analyze_cmd = app.add_subcommand("analyze", "Run contrast families and the trend decision");
  analyze_flags.attach(analyze_cmd, true);
  auto* trend_cmd = app.add_subcommand("trend-report", "Williams and pairwise non-inferiority intervals with the verdict");
  trend_flags.attach(trend_cmd, false);
  auto* tukey_cmd = app.add_subcommand("tukey", "Joint trend regression over three dose scorings");
  tukey_flags.attach(tukey_cmd, false);
  auto* sim_cmd = app.add_subcommand("simulate", "Operating characteristics of the decision procedure");
  sim_flags.attach(sim_cmd);
  auto* contrast_cmd = app.add_subcommand("contrasts", "Print a contrast matrix for the design in --data");
  contrast_cmd->add_option("--data", contrast_flags.data, "Input CSV")->required();
  contrast_cmd->add_option("--config", contrast_flags.config, "Configuration file");
  contrast_cmd->add_option("--family", contrast_family, "Contrast family (default williams)");
  contrast_cmd->add_option_function<std::string>(
      "--endpoint", [&](const std::string& v) { contrast_flags.settings["endpoint"] = v; }, "continuous or binomial");
  contrast_cmd->add_option_function<std::string>(
      "--dose-col", [&](const std::string& v) { contrast_flags.settings["dose_col"] = v; }, "Dose column name");
  contrast_cmd->add_option_function<std::string>(
      "--group-col", [&](const std::string& v) { contrast_flags.settings["group_col"] = v; }, "Group column name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "dosetrend: " << e.what() << "\n";
    return 2;
  }

  const std::string command = command_line(argc, argv);
  try {
    if (*analyze_cmd) return run_analysis(Mode::analyze, analyze_flags, command, out);
    if (*trend_cmd) return run_analysis(Mode::trend, trend_flags, command, out);
    if (*tukey_cmd) return run_analysis(Mode::tukey, tukey_flags, command, out);
    if (*sim_cmd) return run_simulation(sim_flags, out);
    if (*contrast_cmd) return run_contrasts(contrast_flags, contrast_family, out);
  } catch (const Error& e) {
    err << "dosetrend: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    err << "dosetrend: " << e.what() << "\n";
    return 3;
  }
  return 2;
}

}  // namespace dosetrend
