#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdl/inequality_checks.hpp"
#include "mdl/loss_engine.hpp"
#include "mdl/model_class.hpp"

namespace mdl {

std::string tool_version();

/// "%.17g", with "inf", "-inf" and "nan" spelled out.
std::string format_number(double x);

/// JSON number for finite x, otherwise the format_number string.
nlohmann::json json_number(double x);

struct NamedClass {
  std::string name;
  ModelClass cls;
};

/// The classes every consistency check runs on, each with a designated truth:
/// the singleton {1/2} at Kw 0, counterexample_class(2) and (3), the dyadic
/// grid of precision 6 around 3/16, and the t^2 image of the precision-5 grid
/// around 9/16.
std::vector<NamedClass> builtin_test_classes();

/// Steps for interval-bound evaluations: the class resolution plus enough
/// further steps for the truncation test to see only empty I_k.
unsigned default_interval_steps(const ModelClass& cls);

/// A truncated grid of precision P can miss members that would still win
/// at horizon H; flags 2^-P >= 1/(4 sqrt(H)).
std::optional<std::string> consistency_warning(unsigned precision, std::uint64_t horizon);

/// Everything that determines a run's output. Thread count and wall time
/// are deliberately absent so identical manifests give identical files.
struct RunManifest {
  std::string scenario;
  std::string class_hash;
  unsigned truncation_precision = 0;
  std::uint64_t horizon = 0;
  std::vector<std::string> rules;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> paths;
  std::uint64_t enumeration_threshold = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

RunManifest make_manifest(std::string scenario, const ModelClass& cls, std::uint64_t horizon,
                          const EngineOptions& options);

/// Columns n,inst_loss,cum_loss.
void write_loss_curve_csv(std::ostream& out, const std::vector<double>& per_n);

// ---------------------------------------------------------------------------

struct CounterexampleRow {
  unsigned n_bits = 0;
  std::uint64_t horizon = 0;
  double loss = 0.0;
  double tail_estimate = 0.0;
  /// (2^N - 5) / 84; negative (vacuous) for N <= 2.
  double lower_value = 0.0;
  double scale = 0.0;  // 2^N
  std::optional<double> ratio_to_previous;
  /// The horizon stops short of 2^(2 (2^N - 1)), where the last competitor's
  /// contribution zone ends.
  bool truncated = false;
};

std::vector<CounterexampleRow> run_counterexample(const std::vector<unsigned>& n_list, std::uint64_t horizon,
                                                  const EngineOptions& options = {});

void write_counterexample_csv(std::ostream& out, const std::vector<CounterexampleRow>& rows);

struct HalfKwRow {
  Parameter theta0;
  double kw = 0.0;
  double loss = 0.0;
  double budget = 0.0;  // Kw / 2
  bool pass = false;
  double ratio = 0.0;  // loss / Kw
  double tail_estimate = 0.0;
};

struct HalfKwResult {
  unsigned precision = 0;
  std::uint64_t horizon = 0;
  std::vector<HalfKwRow> rows;
  double max_ratio = 0.0;
  bool all_pass = true;
  std::string tail_method;
  std::optional<std::string> warning;
};

/// MDL loss on dyadic_grid_class(precision) against half the truth's
/// complexity. Every theta0 must be a member of the grid.
HalfKwResult run_half_kw_check(const std::vector<Parameter>& theta0_list, unsigned precision,
                               std::uint64_t horizon, const EngineOptions& options = {});

void write_half_kw_csv(std::ostream& out, const HalfKwResult& result);

struct BoundValue {
  std::string name;
  double value = 0.0;
  /// The bound is known only up to an unspecified multiplicative constant.
  bool up_to_constant = false;
  std::string provenance;
};

struct RaceRow {
  Rule rule = Rule::mdl;
  double loss = 0.0;
  double tail_estimate = 0.0;
  std::vector<double> ratios;  // loss / bound, aligned with RaceResult::bounds
};

struct RaceResult {
  std::uint64_t horizon = 0;
  double kw0 = 0.0;
  std::vector<BoundValue> bounds;
  std::vector<RaceRow> rows;
  bool interval_bound_truncated = false;
  /// Cumulative Bayes loss stayed within ln(1/w0) at every n <= horizon.
  bool bayes_within_bound = true;
};

RaceResult run_bound_race(const ModelClass& cls, std::uint64_t horizon, const EngineOptions& options = {});

void write_race_csv(std::ostream& out, const RaceResult& result);

// ---------------------------------------------------------------------------

struct VerificationOptions {
  std::size_t grid_density = 200;
  std::size_t sandwich_n_max = 512;
  std::size_t z_points = 200;
  std::size_t random_theta0 = 1000;
  unsigned k_max = 40;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct VerificationResult {
  std::vector<InequalityReport> reports;
  /// The check of inequality (i) with its constant raised to 2.2 reported a
  /// violation, as it must.
  bool self_test_passed = false;
  bool all_satisfied = false;
  nlohmann::json report;
};

/// Runs every inequality and interval check. Informational reports (ids
/// ending in ".const2") are listed but never decide all_satisfied.
VerificationResult run_verification_suite(const VerificationOptions& options = {});

nlohmann::json report_to_json(const InequalityReport& report);

}  // namespace mdl
