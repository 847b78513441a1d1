#pragma once

// Slot-synchronous simulator of the CSMA/CA procedure over a superframe.
// Independent of the analytic model: it only shares the static protocol
// mathematics (windows, airtimes, PER) and the metric definitions.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wban/metrics.hpp"
#include "wban/scenario.hpp"

namespace wban {

struct SimConfig {
  std::uint64_t seed = 1;
  int superframes = 500;
  int warmup_superframes = 5;
  bool trace = false;
};

void validate(const SimConfig& cfg);

struct NodeState {
  int up = 0;
  int index = 0;  ///< position within its UP
  bool has_frame = false;
  int stage = 0;
  int counter = 0;
  bool locked = false;
  double arrival_time_s = 0;       ///< when the buffered frame arrived
  double next_arrival_time_s = 0;  ///< next Poisson arrival while empty
  double energy_j = 0;             ///< own-exchange energy in the measured window
  double own_airtime_s = 0;
};

struct UpCounters {
  int up = 0;
  int nodes = 0;
  std::int64_t frames_generated = 0;
  std::int64_t successes = 0;
  std::int64_t collisions = 0;
  std::int64_t error_transmissions = 0;
  std::int64_t drops = 0;
  std::int64_t buffered_at_end = 0;
  double sum_access_delay_s = 0;  ///< arrival to start of the last attempt
  double sum_total_delay_s = 0;   ///< arrival to end of the last exchange
  double busy_airtime_s = 0;      ///< own exchanges
  double payload_airtime_s = 0;
  double energy_j = 0;            ///< all nodes of the UP, idle time included

  std::int64_t resolved() const { return successes + drops; }
};

struct PhaseAccounting {
  PhaseId phase;
  double duration_s = 0;
  double busy_s = 0;     ///< summed over measured superframes
  double idle_s = 0;
  double max_gap_s = 0;  ///< largest per-superframe shortfall of busy + idle vs duration
};

struct SimStats {
  std::vector<UpCounters> per_up;
  std::vector<PhaseAccounting> phases;
  double observation_time_s = 0;
  std::int64_t idle_slots = 0;
  std::int64_t busy_periods = 0;

  const UpCounters* find(int up) const;
};

enum class TraceKind { arrival, decrement, lock, unlock, tx_start, success, collision, error, drop };

std::string_view to_string(TraceKind k);

struct TraceEvent {
  double time_s = 0;
  int node = 0;  ///< global node id
  int up = 0;
  TraceKind kind = TraceKind::arrival;
  PhaseId phase = PhaseId::RAP;
  int stage = 0;
  int counter = 0;
  int window = 0;
};

/// `time_s node_id up event detail`, one event per line.
void write_trace(std::ostream& os, const std::vector<TraceEvent>& events);

struct SimResult {
  SimStats stats;
  MetricsReport metrics;
  std::vector<TraceEvent> events;  ///< empty unless SimConfig::trace

  const std::vector<TraceEvent>& trace() const { return events; }
};

SimResult run(const Scenario& scenario, const SimConfig& cfg);

/// Metrics from raw counters. UPs without resolved frames get absent values.
MetricsReport empirical_metrics(const SimStats& stats, const Scenario& scenario);

}  // namespace wban
