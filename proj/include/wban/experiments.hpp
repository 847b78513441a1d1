#pragma once

// Experiment descriptions, sweeps over one scenario variable, scheme
// comparison, and the CSV / .dat / summary.json writers.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wban/analytic_model.hpp"
#include "wban/metrics.hpp"
#include "wban/scenario.hpp"
#include "wban/simulator.hpp"

namespace wban {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class SweepVariable { total_nodes, ber, lambda, rap_s };

std::string_view to_string(SweepVariable v);

struct SweepSpec {
  SweepVariable variable = SweepVariable::total_nodes;
  std::vector<double> values;
};

struct ExperimentSpec {
  Scenario scenario;
  std::optional<SweepSpec> sweep;
  bool analytic = true;
  bool simulate = false;
  std::vector<std::uint64_t> seeds{1};
  int superframes = 500;
  int warmup_superframes = 5;
  SolverOptions solver;
  std::string output_dir = "out";

  /// Sweep values, or the single template point when no sweep is configured.
  SweepSpec effective_sweep() const;
  SimConfig sim_config(std::uint64_t seed) const;
};

/// Parses a JSON document. Omitted fields take the default parameter set.
ExperimentSpec parse_spec(const std::string& json_text);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// The main random-access phase: RAP for the modified scheme, RAP1 for the standard one.
PhaseId main_access_phase(SchemeKind kind);

/// Template scenario with one sweep variable set to `value`; validated.
Scenario apply_sweep_value(const ExperimentSpec& spec, SweepVariable variable, double value);

inline constexpr int kAggregateRow = -1;

struct ResultRow {
  std::string scheme;
  std::string mode;  ///< "analytic" or "simulate"
  double sweep_value = 0;
  int up = kAggregateRow;
  UpMetrics metrics;
  std::optional<double> jain;
  std::optional<double> aggregate_throughput_bps;
  std::optional<int> iterations;
  std::optional<double> residual;
  std::optional<std::uint64_t> seed;
  std::string status = "ok";
};

struct SweepResult {
  std::string scheme;
  SweepSpec sweep;
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
};

/// Runs every (sweep value x mode x seed). Failed analytic points produce
/// flagged rows with absent metrics instead of aborting the sweep.
SweepResult run_sweep(const ExperimentSpec& spec);

/// Rows for one analytic solve or one simulation run.
std::vector<ResultRow> analytic_rows(const Scenario& scenario, const SchemeSolution& solution,
                                     double sweep_value);
std::vector<ResultRow> simulation_rows(const Scenario& scenario, const SimResult& result,
                                       double sweep_value, std::uint64_t seed);

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);
void write_json(std::ostream& os, const std::vector<ResultRow>& rows);
std::string format_number(std::optional<double> v);

/// results.csv, one .dat per metric per scheme and mode, and summary.json.
void write_outputs(const SweepResult& result, const std::filesystem::path& dir);

struct ComparisonRow {
  double sweep_value = 0;
  int up = kAggregateRow;
  std::string metric;
  std::optional<double> standard;
  std::optional<double> modified;
  std::optional<double> delta;  ///< modified - standard
};

/// Paired analytic metrics of two specs over a shared sweep. Throws
/// ValidationError if the specs differ in PHY, timing, channel, energy,
/// contention time or sweep values, or if the sweep is empty.
std::vector<ComparisonRow> compare(const ExperimentSpec& standard, const ExperimentSpec& modified);

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);

}  // namespace wban
