#pragma once

#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "dosetrend/data.hpp"
#include "dosetrend/error.hpp"

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(DOSETREND_DATA_DIR) + "/" + name; }

inline dosetrend::DoseResponseTable load(const std::string& name, const dosetrend::ColumnSchema& schema = {}) {
  std::ifstream in(path(name));
  if (!in) throw std::runtime_error("missing fixture " + name);
  return dosetrend::parse_dose_table(in, schema);
}

inline dosetrend::ColumnSchema case_control_schema() {
  dosetrend::ColumnSchema s;
  s.endpoint = dosetrend::EndpointKind::binomial;
  s.successes = "cases";
  s.failures = "controls";
  return s;
}

inline dosetrend::DoseResponseTable reaction() { return load("reaction.csv"); }
inline dosetrend::DoseResponseTable daphnia() { return load("daphnia.csv"); }
inline dosetrend::DoseResponseTable case_control() { return load("cc_ex.csv", case_control_schema()); }

inline dosetrend::DoseResponseTable from_text(const std::string& csv, const dosetrend::ColumnSchema& schema = {}) {
  std::istringstream in(csv);
  return dosetrend::parse_dose_table(in, schema);
}

/// Code of the dosetrend::Error thrown by f; Io when nothing is thrown.
inline dosetrend::ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const dosetrend::Error& e) {
    return e.code();
  }
  return dosetrend::ErrorCode::Io;
}

}  // namespace fixtures
