#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dosetrend {

enum class EndpointKind { continuous, binomial };

std::string to_string(EndpointKind kind);

struct Observation {
  std::string group_label;
  double dose = 0.0;
  double response = 0.0;        // continuous only
  std::int64_t successes = 0;   // binomial only
  std::int64_t failures = 0;    // binomial only
};

struct DoseResponseTable {
  EndpointKind endpoint = EndpointKind::continuous;
  std::vector<Observation> rows;
};

/// Column-name mapping for delimited input.
///
/// Continuous tables need `dose` and `response`. Binomial tables need `dose`
/// plus either `successes` with `failures` (or `trials`), or a 0/1
/// `response` column which is folded into per-row counts. When `group` is
/// empty the dose text is used as the group label.
struct ColumnSchema {
  EndpointKind endpoint = EndpointKind::continuous;
  std::string dose = "dose";
  std::string group;
  std::string response = "response";
  std::string successes;
  std::string failures;
  std::string trials;
};

struct GroupInfo {
  std::string label;
  double dose = 0.0;
  std::int64_t n = 0;  // observations (continuous) or trials (binomial)

  bool operator==(const GroupInfo&) const = default;
};

/// Dose-ordered groups; index 0 is the control (lowest dose).
struct ValidatedDesign {
  EndpointKind endpoint = EndpointKind::continuous;
  std::vector<GroupInfo> groups;

  std::size_t k() const { return groups.size() - 1; }
  std::size_t group_count() const { return groups.size(); }
  std::vector<double> doses() const;
  std::vector<double> sizes() const;
  /// Group index for a label; throws InvalidDesign when absent.
  std::size_t index_of(const std::string& label) const;

  bool operator==(const ValidatedDesign&) const = default;
};

struct GroupSummary {
  std::string label;
  double dose = 0.0;
  std::int64_t n = 0;
  double mean = 0.0;        // proportion for binomial endpoints
  double sd = 0.0;          // NaN for n < 2 or binomial endpoints
  std::int64_t successes = 0;
};

DoseResponseTable parse_dose_table(std::istream& source, const ColumnSchema& schema);

ValidatedDesign validate(const DoseResponseTable& table);

std::vector<GroupSummary> group_summaries(const ValidatedDesign& design,
                                          const DoseResponseTable& table);

/// Per-row group index for `table` under `design`.
std::vector<std::size_t> row_groups(const ValidatedDesign& design, const DoseResponseTable& table);

std::string serialize_design(const ValidatedDesign& design);
ValidatedDesign parse_design(const std::string& text);

}  // namespace dosetrend
