#pragma once

#include <optional>
#include <span>
#include <vector>

#include "wban/analytic_model.hpp"
#include "wban/protocol.hpp"
#include "wban/scenario.hpp"

namespace wban {

double reliability(double p_fail, int m, int x);
double throughput(double p_succ_i, double p_tran, double framebody_bits, double t_e_s);
double aggregate_throughput(std::span<const double> per_up);
double access_delay(const PriorityClass& p, double p_fail, double t_e_s);
double channel_utilization(double p_succ_i, double p_tran, double t_framebody_s, double t_e_s);
double total_utilization(std::span<const double> per_up);

/// Jain's index over the given throughputs. Throws DegenerateInputError if all are zero.
double jain_fairness(std::span<const double> per_up);

struct EnergyBreakdown {
  double idle = 0;
  double succ = 0;
  double coll = 0;
  double error = 0;
  double total() const { return idle + succ + coll + error; }
};

/// Energy a node spends on its own successful (or errored) and collided exchange.
struct ExchangeEnergy {
  double success = 0;
  double collision = 0;
};

ExchangeEnergy exchange_energy(AccessMechanism access, const TxDurations& tx,
                               const EnergyParams& power, const TimingParams& timing);

/// Expected energy per model state for one class of a solved phase.
EnergyBreakdown energy(const ClassSolution& cls, const SolutionReport& phase,
                       AccessMechanism access, const EnergyParams& power,
                       const TimingParams& timing);

/// Metric values for one UP. Empty optionals mean "not measurable", never zero.
struct UpMetrics {
  int up = 0;
  std::optional<double> reliability;
  std::optional<double> throughput_bps;
  std::optional<double> delay_s;
  std::optional<double> total_delay_s;  ///< simulator only: includes the final exchange
  std::optional<double> energy_per_state_j;
  std::optional<double> avg_power_w;
  std::optional<double> utilization;
};

struct MetricsReport {
  std::vector<UpMetrics> per_up;
  std::optional<double> aggregate_throughput_bps;
  std::optional<double> utilization;
  std::optional<double> jain;

  const UpMetrics* find(int up) const;
};

/// Metrics of each class within one solved phase.
std::vector<UpMetrics> phase_metrics(const SolutionReport& phase, const Scenario& scenario);

/// Per-UP metrics composed over the phases a UP may contend in, plus aggregates.
/// Rates (throughput, utilization) are weighted by the phase share of contention
/// time; reliability, delay and per-state energy are time-weighted averages over
/// the permitted phases; average power charges idle power for non-permitted time.
MetricsReport analytic_metrics(const SchemeSolution& solution, const Scenario& scenario);

/// Fills the aggregate fields from per_up.
void finish_aggregates(MetricsReport& report);

}  // namespace wban
