#pragma once

#include <string>
#include <vector>

#include "tdsmor/delay_system.hpp"

namespace tdsmor {

/// Input grammar, one descriptor per channel separated by ';':
///   "ramp-sine a b"  a * t * sin(b * t)
///   "exp c"          exp(c * t)
///   "zero"           0 (a lone "zero" covers every channel)
///   "file PATH"      whitespace/comma separated samples, one row per time step, one column per channel
InputSignal parse_input(const std::string& descriptor, int channels);

/// Shortest representation with 17 significant digits, locale independent.
std::string format_number(double value);

struct ComparedModel {
  std::string label;
  Trajectory trajectory;
  ErrorMetrics metrics;
  double reduction_seconds = 0.0;
  int order = 0;
};

struct Comparison {
  Trajectory full;
  std::vector<ComparedModel> models;
};

Comparison compare_models(const DelaySystem& system, const InitialData& init,
                          const std::vector<ReducedSystem>& reduced,
                          const std::vector<std::string>& labels, const InputSignal& input,
                          long horizon);

/// t, y_full[1..p], then per model y[1..p] and abs_err.
std::string comparison_csv(const Comparison& comparison);
/// Per model rel_l2, max_abs_err, reduction_seconds, order.
std::string comparison_json(const Comparison& comparison, const std::string& input_descriptor);

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct SelftestReport {
  std::vector<SelftestCheck> checks;
  bool passed() const;
};

/// Runs the invariant suites of every module at small sizes.
SelftestReport run_selftest();

}  // namespace tdsmor
