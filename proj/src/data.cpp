#include "dosetrend/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "dosetrend/error.hpp"

namespace dosetrend {
namespace {

const std::string kModule = "data";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  std::string out(s.substr(first, last - first + 1));
  if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
  return out;
}

// Comma split with double-quoted fields; doubled quotes inside a field escape a quote.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) throw Error(ErrorCode::MalformedInput, kModule, fmt::format("unterminated quote on line {}", line_no));
  fields.push_back(trim(current));
  return fields;
}

double parse_number(const std::string& text, std::size_t line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (!text.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorCode::NonNumericValue, kModule,
                fmt::format("row {}: column '{}' value '{}' is not a finite number", line_no, column, text));
  }
  return value;
}

std::int64_t parse_count(const std::string& text, std::size_t line_no, const std::string& column) {
  const double value = parse_number(text, line_no, column);
  if (value < 0) {
    throw Error(ErrorCode::NegativeCount, kModule, fmt::format("row {}: column '{}' is negative", line_no, column));
  }
  if (value != std::floor(value)) {
    throw Error(ErrorCode::NonNumericValue, kModule,
                fmt::format("row {}: column '{}' value '{}' is not an integer count", line_no, column, text));
  }
  return static_cast<std::int64_t>(value);
}

double neumaier_sum(const std::vector<double>& values) {
  double sum = 0.0;
  double compensation = 0.0;
  for (const double v : values) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      compensation += (sum - t) + v;
    } else {
      compensation += (v - t) + sum;
    }
    sum = t;
  }
  return sum + compensation;
}

}  // namespace

std::string to_string(EndpointKind kind) {
  return kind == EndpointKind::continuous ? "continuous" : "binomial";
}

std::vector<double> ValidatedDesign::doses() const {
  std::vector<double> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(g.dose);
  return out;
}

std::vector<double> ValidatedDesign::sizes() const {
  std::vector<double> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(static_cast<double>(g.n));
  return out;
}

std::size_t ValidatedDesign::index_of(const std::string& label) const {
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (groups[i].label == label) return i;
  }
  throw Error(ErrorCode::InvalidDesign, kModule, fmt::format("unknown group label '{}'", label));
}

DoseResponseTable parse_dose_table(std::istream& source, const ColumnSchema& schema) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(source, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    header = split_csv_line(line, line_no);
    break;
  }
  if (header.empty()) throw Error(ErrorCode::MalformedInput, kModule, "input has no header row");

  const auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    if (name.empty()) {
      if (required) throw Error(ErrorCode::MissingColumn, kModule, "required column name not configured");
      return std::nullopt;
    }
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      if (required) throw Error(ErrorCode::MissingColumn, kModule, fmt::format("column '{}' not found in header", name));
      return std::nullopt;
    }
    return static_cast<std::size_t>(it - header.begin());
  };

  const auto dose_col = column(schema.dose, true);
  const auto group_col = column(schema.group, !schema.group.empty());
  std::optional<std::size_t> response_col;
  std::optional<std::size_t> success_col;
  std::optional<std::size_t> failure_col;
  std::optional<std::size_t> trials_col;
  if (schema.endpoint == EndpointKind::continuous) {
    response_col = column(schema.response, true);
  } else if (!schema.successes.empty()) {
    success_col = column(schema.successes, true);
    if (!schema.failures.empty()) {
      failure_col = column(schema.failures, true);
    } else if (!schema.trials.empty()) {
      trials_col = column(schema.trials, true);
    } else {
      throw Error(ErrorCode::MissingColumn, kModule, "binomial schema needs a failures or trials column");
    }
  } else {
    response_col = column(schema.response, true);  // Bernoulli 0/1 long format
  }

  DoseResponseTable table;
  table.endpoint = schema.endpoint;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::MalformedInput, kModule,
                  fmt::format("row {}: expected {} fields, found {}", line_no, header.size(), fields.size()));
    }
    Observation obs;
    const std::string& dose_text = fields[*dose_col];
    obs.dose = parse_number(dose_text, line_no, schema.dose);
    if (obs.dose < 0) {
      throw Error(ErrorCode::NonNumericValue, kModule, fmt::format("row {}: dose must be nonnegative", line_no));
    }
    obs.group_label = group_col ? fields[*group_col] : dose_text;
    if (schema.endpoint == EndpointKind::continuous) {
      obs.response = parse_number(fields[*response_col], line_no, schema.response);
    } else if (success_col) {
      obs.successes = parse_count(fields[*success_col], line_no, schema.successes);
      if (failure_col) {
        obs.failures = parse_count(fields[*failure_col], line_no, schema.failures);
      } else {
        const auto trials = parse_count(fields[*trials_col], line_no, schema.trials);
        if (trials < obs.successes) {
          throw Error(ErrorCode::NegativeCount, kModule, fmt::format("row {}: trials below successes", line_no));
        }
        obs.failures = trials - obs.successes;
      }
    } else {
      const auto y = parse_count(fields[*response_col], line_no, schema.response);
      if (y > 1) {
        throw Error(ErrorCode::NonNumericValue, kModule,
                    fmt::format("row {}: Bernoulli response must be 0 or 1", line_no));
      }
      obs.successes = y;
      obs.failures = 1 - y;
    }
    table.rows.push_back(std::move(obs));
  }
  return table;
}

ValidatedDesign validate(const DoseResponseTable& table) {
  struct Accumulator {
    double dose = 0.0;
    std::int64_t n = 0;
  };
  std::map<std::string, Accumulator> by_label;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (!std::isfinite(row.dose) || row.dose < 0) {
      throw Error(ErrorCode::InvalidDesign, kModule, fmt::format("row {}: dose must be finite and nonnegative", i + 1));
    }
    if (table.endpoint == EndpointKind::continuous) {
      if (row.successes != 0 || row.failures != 0 || !std::isfinite(row.response)) {
        throw Error(ErrorCode::EndpointMismatch, kModule,
                    fmt::format("row {}: continuous rows carry a finite response and no counts", i + 1));
      }
    } else if (row.successes < 0 || row.failures < 0 || row.response != 0.0) {
      throw Error(ErrorCode::EndpointMismatch, kModule,
                  fmt::format("row {}: binomial rows carry nonnegative counts and no response", i + 1));
    }
    auto [it, inserted] = by_label.try_emplace(row.group_label, Accumulator{row.dose, 0});
    if (!inserted && it->second.dose != row.dose) {
      throw Error(ErrorCode::InconsistentDoseWithinGroup, kModule,
                  fmt::format("group '{}' has doses {} and {}", row.group_label, it->second.dose, row.dose));
    }
    it->second.n += table.endpoint == EndpointKind::continuous ? 1 : row.successes + row.failures;
  }
  if (by_label.size() < 2) {
    throw Error(ErrorCode::SingleGroup, kModule,
                fmt::format("need at least 2 dose groups, found {}", by_label.size()));
  }

  ValidatedDesign design;
  design.endpoint = table.endpoint;
  for (const auto& [label, acc] : by_label) {
    if (acc.n < 1) {
      throw Error(ErrorCode::EmptyGroup, kModule, fmt::format("group '{}' has no observations", label));
    }
    design.groups.push_back({label, acc.dose, acc.n});
  }
  std::sort(design.groups.begin(), design.groups.end(),
            [](const GroupInfo& a, const GroupInfo& b) { return a.dose < b.dose; });
  for (std::size_t i = 1; i < design.groups.size(); ++i) {
    if (design.groups[i].dose == design.groups[i - 1].dose) {
      throw Error(ErrorCode::DuplicateDose, kModule,
                  fmt::format("groups '{}' and '{}' share dose {}", design.groups[i - 1].label,
                              design.groups[i].label, design.groups[i].dose));
    }
  }
  return design;
}

std::vector<std::size_t> row_groups(const ValidatedDesign& design, const DoseResponseTable& table) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < design.groups.size(); ++i) index.emplace(design.groups[i].label, i);
  std::vector<std::size_t> out;
  out.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    const auto it = index.find(row.group_label);
    if (it == index.end()) {
      throw Error(ErrorCode::InvalidDesign, kModule, fmt::format("row label '{}' not in design", row.group_label));
    }
    out.push_back(it->second);
  }
  return out;
}

std::vector<GroupSummary> group_summaries(const ValidatedDesign& design, const DoseResponseTable& table) {
  const auto groups = row_groups(design, table);
  const std::size_t g = design.groups.size();
  std::vector<std::vector<double>> values(g);
  std::vector<std::int64_t> successes(g, 0);
  std::vector<std::int64_t> trials(g, 0);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    values[groups[r]].push_back(row.response);
    successes[groups[r]] += row.successes;
    trials[groups[r]] += row.successes + row.failures;
  }

  std::vector<GroupSummary> out;
  out.reserve(g);
  for (std::size_t i = 0; i < g; ++i) {
    GroupSummary s;
    s.label = design.groups[i].label;
    s.dose = design.groups[i].dose;
    s.n = design.groups[i].n;
    if (design.endpoint == EndpointKind::continuous) {
      auto& v = values[i];
      std::sort(v.begin(), v.end());  // summation order independent of row order
      const double n = static_cast<double>(v.size());
      s.mean = neumaier_sum(v) / n;
      if (v.size() > 1) {
        std::vector<double> squares;
        squares.reserve(v.size());
        for (const double x : v) squares.push_back((x - s.mean) * (x - s.mean));
        s.sd = std::sqrt(neumaier_sum(squares) / (n - 1.0));
      } else {
        s.sd = std::nan("");
      }
    } else {
      s.successes = successes[i];
      s.mean = static_cast<double>(successes[i]) / static_cast<double>(trials[i]);
      s.sd = std::nan("");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string serialize_design(const ValidatedDesign& design) {
  std::string out = "endpoint\t" + to_string(design.endpoint) + "\n";
  for (const auto& g : design.groups) {
    if (g.label.find_first_of("\t\n") != std::string::npos) {
      throw Error(ErrorCode::InvalidDesign, kModule, "group labels may not contain tabs or newlines");
    }
    out += fmt::format("group\t{}\t{:.17g}\t{}\n", g.label, g.dose, g.n);
  }
  return out;
}

ValidatedDesign parse_design(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ValidatedDesign design;
  DoseResponseTable table;
  bool saw_endpoint = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::string part;
    std::istringstream fields(line);
    while (std::getline(fields, part, '\t')) parts.push_back(part);
    if (parts.size() == 2 && parts[0] == "endpoint") {
      if (parts[1] == "continuous") {
        table.endpoint = EndpointKind::continuous;
      } else if (parts[1] == "binomial") {
        table.endpoint = EndpointKind::binomial;
      } else {
        throw Error(ErrorCode::MalformedInput, kModule, "unknown endpoint '" + parts[1] + "'");
      }
      saw_endpoint = true;
    } else if (parts.size() == 4 && parts[0] == "group") {
      const double dose = parse_number(parts[2], 0, "dose");
      const auto n = parse_count(parts[3], 0, "n");
      // Rebuild a minimal table so the structure passes through `validate` again.
      Observation obs;
      obs.group_label = parts[1];
      obs.dose = dose;
      if (table.endpoint == EndpointKind::continuous) {
        for (std::int64_t i = 0; i < n; ++i) table.rows.push_back(obs);
      } else {
        obs.failures = n;
        table.rows.push_back(obs);
      }
    } else {
      throw Error(ErrorCode::MalformedInput, kModule, "unrecognized design line: " + line);
    }
  }
  if (!saw_endpoint) throw Error(ErrorCode::MalformedInput, kModule, "design text lacks an endpoint line");
  return validate(table);
}

}  // namespace dosetrend
