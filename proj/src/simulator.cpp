#include "wban/simulator.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "wban/error.hpp"

namespace wban {

namespace {

constexpr double kEps = 1e-9;

/// Per-node random stream keyed on (seed, UP, index within UP), so adding
/// nodes to one UP never shifts the draws of another.
class NodeRng {
public:
  NodeRng(std::uint64_t seed, int up, int index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(up), static_cast<std::uint32_t>(index)};
    engine_.seed(seq);
  }

  /// Uniform integer in [lo, hi], by rejection so the result is library independent.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return lo + static_cast<int>(r % span);
  }

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double exponential(double rate) {
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return -std::log1p(-uniform01()) / rate;
  }

private:
  std::mt19937_64 engine_;
};

struct Node {
  NodeState state;
  const PriorityClass* cls = nullptr;
  std::vector<int> windows;
  double lambda = 0;
  NodeRng rng;
  std::size_t counter_slot = 0;  ///< index into SimStats::per_up
};

std::int64_t floor_slots(double seconds, double slot) {
  return static_cast<std::int64_t>(std::floor(seconds / slot + kEps));
}

std::int64_t ceil_slots(double seconds, double slot) {
  return static_cast<std::int64_t>(std::ceil(seconds / slot - kEps));
}

class Engine {
public:
  Engine(const Scenario& scenario, const SimConfig& cfg)
      : sc_(scenario),
        cfg_(cfg),
        tx_(scenario.tx()),
        per_(scenario.per()),
        slot_(scenario.timing.csma_slot_s),
        lock_margin_(tx_.t_succ_s + scenario.timing.sifs_s),
        exchange_(exchange_energy(scenario.scheme.access, tx_, scenario.energy, scenario.timing)) {
    succ_slots_ = ceil_slots(tx_.t_succ_s + scenario.timing.sifs_s, slot_);
    coll_slots_ = ceil_slots(tx_.t_coll_s + scenario.timing.sifs_s, slot_);

    for (const auto& cls : sc_.scheme.priorities) {
      const int count = sc_.nodes(cls.id);
      if (count == 0) continue;
      UpCounters uc;
      uc.up = cls.id;
      uc.nodes = count;
      stats_.per_up.push_back(uc);
      const std::vector<int> windows = window_schedule(cls);
      for (int c = 0; c < count; ++c) {
        Node n{NodeState{}, &cls, windows, sc_.arrival_rate(cls.id), NodeRng(cfg_.seed, cls.id, c),
               stats_.per_up.size() - 1};
        n.state.up = cls.id;
        n.state.index = c;
        n.state.next_arrival_time_s = n.rng.exponential(n.lambda);
        nodes_.push_back(std::move(n));
      }
    }
    for (const auto& ph : sc_.scheme.phases) {
      stats_.phases.push_back(PhaseAccounting{ph.id, ph.duration_s, 0, 0, 0});
      if (!is_contention_phase(ph.id) || ph.duration_s <= 0.0) continue;
      const bool anyone = std::any_of(sc_.scheme.priorities.begin(), sc_.scheme.priorities.end(),
                                      [&](const PriorityClass& p) { return p.permitted_in(ph.id); });
      if (anyone && floor_slots(ph.duration_s - lock_margin_, slot_) < 1)
        throw ValidationError("phases." + std::string(to_string(ph.id)),
                              "shorter than one slot plus a complete transaction");
    }
  }

  SimResult run() {
    const double superframe = sc_.scheme.superframe_s();
    measure_start_ = cfg_.warmup_superframes * superframe;
    for (int s = 0; s < cfg_.superframes; ++s) {
      measured_ = s >= cfg_.warmup_superframes;
      if (s == cfg_.warmup_superframes) {
        for (const auto& n : nodes_)
          if (n.state.has_frame) ++stats_.per_up[n.counter_slot].frames_generated;
      }
      double start = s * superframe;
      for (std::size_t p = 0; p < sc_.scheme.phases.size(); ++p) {
        const Phase& phase = sc_.scheme.phases[p];
        busy_s_ = idle_s_ = 0.0;
        if (phase.duration_s > 0.0) {
          if (is_contention_phase(phase.id)) {
            run_contention_phase(phase, start);
          } else {
            for (auto& n : nodes_)
              if (n.state.has_frame) set_locked(n, true, start, phase.id);
            idle_s_ = floor_slots(phase.duration_s, slot_) * slot_;
          }
        }
        if (measured_) {
          auto& acc = stats_.phases[p];
          acc.busy_s += busy_s_;
          acc.idle_s += idle_s_;
          acc.max_gap_s = std::max(acc.max_gap_s, phase.duration_s - busy_s_ - idle_s_);
        }
        start += phase.duration_s;
      }
    }
    finish();
    SimResult result;
    result.stats = stats_;
    result.metrics = empirical_metrics(stats_, sc_);
    result.events = std::move(events_);
    return result;
  }

private:
  void emit(TraceKind kind, double t, const Node& n, PhaseId phase) {
    if (!cfg_.trace) return;
    TraceEvent e;
    e.time_s = t;
    e.node = static_cast<int>(&n - nodes_.data());
    e.up = n.state.up;
    e.kind = kind;
    e.phase = phase;
    e.stage = n.state.stage;
    e.counter = n.state.counter;
    e.window = n.windows[static_cast<std::size_t>(n.state.stage)];
    events_.push_back(e);
  }

  void set_locked(Node& n, bool locked, double t, PhaseId phase) {
    if (n.state.locked == locked) return;
    n.state.locked = locked;
    emit(locked ? TraceKind::lock : TraceKind::unlock, t, n, phase);
  }

  void process_arrivals(double t, PhaseId phase) {
    for (auto& n : nodes_) {
      auto& st = n.state;
      if (st.has_frame || st.next_arrival_time_s > t + kEps) continue;
      st.has_frame = true;
      st.stage = 0;
      st.counter = n.rng.uniform_int(1, n.windows[0]);
      st.locked = false;
      st.arrival_time_s = st.next_arrival_time_s;
      if (measured_) ++stats_.per_up[n.counter_slot].frames_generated;
      emit(TraceKind::arrival, t, n, phase);
    }
  }

  void release_frame(Node& n, double t_end) {
    n.state.has_frame = false;
    n.state.stage = 0;
    n.state.counter = 0;
    n.state.locked = false;
    n.state.next_arrival_time_s = t_end + n.rng.exponential(n.lambda);
  }

  void run_contention_phase(const Phase& phase, double start) {
    const std::int64_t total = floor_slots(phase.duration_s, slot_);
    const std::int64_t usable =
        std::clamp<std::int64_t>(floor_slots(phase.duration_s - lock_margin_, slot_), 0, total);
    std::vector<Node*> ready;
    std::vector<Node*> transmitters;
    std::int64_t i = 0;
    while (i < usable) {
      const double t = start + i * slot_;
      process_arrivals(t, phase.id);
      ready.clear();
      for (auto& n : nodes_) {
        if (!n.state.has_frame) continue;
        const bool permitted = n.cls->permitted_in(phase.id);
        set_locked(n, !permitted, t, phase.id);
        if (permitted) ready.push_back(&n);
      }

      if (ready.empty()) {
        // Nothing can happen before the next arrival of a permitted node.
        double next = std::numeric_limits<double>::infinity();
        for (const auto& n : nodes_)
          if (!n.state.has_frame && n.cls->permitted_in(phase.id))
            next = std::min(next, n.state.next_arrival_time_s);
        std::int64_t target = usable;
        if (std::isfinite(next))
          target = std::clamp<std::int64_t>(ceil_slots(next - start, slot_), i + 1, usable);
        idle_s_ += (target - i) * slot_;
        if (measured_) stats_.idle_slots += target - i;
        i = target;
        continue;
      }

      transmitters.clear();
      for (Node* n : ready)
        if (n->state.counter == 0) transmitters.push_back(n);

      if (transmitters.empty()) {
        for (Node* n : ready) {
          --n->state.counter;
          emit(TraceKind::decrement, t, *n, phase.id);
        }
        idle_s_ += slot_;
        if (measured_) ++stats_.idle_slots;
        ++i;
        continue;
      }

      const bool alone = transmitters.size() == 1;
      const bool errored = alone && transmitters.front()->rng.uniform01() < per_;
      const double duration = alone ? tx_.t_succ_s : tx_.t_coll_s;
      const std::int64_t slots = alone ? succ_slots_ : coll_slots_;
      const double t_end = t + duration;
      for (Node* n : transmitters) emit(TraceKind::tx_start, t, *n, phase.id);

      for (Node* n : transmitters) {
        auto& st = n->state;
        auto& uc = stats_.per_up[n->counter_slot];
        if (measured_) {
          uc.busy_airtime_s += duration;
          st.own_airtime_s += duration;
          st.energy_j += alone ? exchange_.success : exchange_.collision;
        }
        if (alone && !errored) {
          if (measured_) {
            ++uc.successes;
            uc.sum_access_delay_s += t - st.arrival_time_s;
            uc.sum_total_delay_s += t_end - st.arrival_time_s;
            uc.payload_airtime_s += framebody_duration(sc_.phy);
          }
          emit(TraceKind::success, t_end, *n, phase.id);
          release_frame(*n, t_end);
          continue;
        }
        if (measured_) ++(alone ? uc.error_transmissions : uc.collisions);
        emit(alone ? TraceKind::error : TraceKind::collision, t_end, *n, phase.id);
        if (st.stage == n->cls->last_stage()) {
          if (measured_) {
            ++uc.drops;
            uc.sum_access_delay_s += t - st.arrival_time_s;
            uc.sum_total_delay_s += t_end - st.arrival_time_s;
          }
          emit(TraceKind::drop, t_end, *n, phase.id);
          release_frame(*n, t_end);
        } else {
          ++st.stage;
          st.counter = n->rng.uniform_int(1, n->windows[static_cast<std::size_t>(st.stage)]);
        }
      }
      busy_s_ += slots * slot_;
      if (measured_) ++stats_.busy_periods;
      i += slots;
    }

    // Remaining slots cannot hold a transaction: every waiting counter stays locked.
    const double tail = start + i * slot_;
    for (auto& n : nodes_)
      if (n.state.has_frame) set_locked(n, true, tail, phase.id);
    if (i < total) idle_s_ += (total - i) * slot_;
  }

  void finish() {
    const int measured = std::max(0, cfg_.superframes - cfg_.warmup_superframes);
    stats_.observation_time_s = measured * sc_.scheme.superframe_s();
    for (auto& uc : stats_.per_up) uc.energy_j = 0.0;
    for (const auto& n : nodes_) {
      auto& uc = stats_.per_up[n.counter_slot];
      if (n.state.has_frame) ++uc.buffered_at_end;
      uc.energy_j += n.state.energy_j +
                     (stats_.observation_time_s - n.state.own_airtime_s) * sc_.energy.p_idle_w;
    }
  }

  const Scenario& sc_;
  SimConfig cfg_;
  TxDurations tx_;
  double per_;
  double slot_;
  double lock_margin_;
  ExchangeEnergy exchange_;
  std::int64_t succ_slots_ = 0;
  std::int64_t coll_slots_ = 0;

  std::vector<Node> nodes_;
  SimStats stats_;
  std::vector<TraceEvent> events_;
  double measure_start_ = 0;
  bool measured_ = false;
  double busy_s_ = 0;
  double idle_s_ = 0;
};

}  // namespace

void validate(const SimConfig& cfg) {
  if (cfg.superframes < 1) throw ValidationError("superframes", "must be >= 1");
  if (cfg.warmup_superframes < 0 || cfg.warmup_superframes >= cfg.superframes)
    throw ValidationError("warmup_superframes", "must lie in [0, superframes)");
}

const UpCounters* SimStats::find(int up) const {
  for (const auto& c : per_up)
    if (c.up == up) return &c;
  return nullptr;
}

std::string_view to_string(TraceKind k) {
  switch (k) {
    case TraceKind::arrival: return "arrival";
    case TraceKind::decrement: return "decrement";
    case TraceKind::lock: return "lock";
    case TraceKind::unlock: return "unlock";
    case TraceKind::tx_start: return "tx_start";
    case TraceKind::success: return "success";
    case TraceKind::collision: return "collision";
    case TraceKind::error: return "error";
    case TraceKind::drop: return "drop";
  }
  return "?";
}

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events) {
  char line[160];
  for (const auto& e : events) {
    std::snprintf(line, sizeof line, "%.9e %d %d %s phase=%s,j=%d,k=%d,w=%d\n", e.time_s, e.node,
                  e.up, std::string(to_string(e.kind)).c_str(),
                  std::string(to_string(e.phase)).c_str(), e.stage, e.counter, e.window);
    os << line;
  }
}

SimResult run(const Scenario& scenario, const SimConfig& cfg) {
  validate(scenario);
  validate(cfg);
  return Engine(scenario, cfg).run();
}

MetricsReport empirical_metrics(const SimStats& stats, const Scenario& scenario) {
  if (!(stats.observation_time_s > 0.0))
    throw ContractViolation("observation time must be positive");
  const double obs = stats.observation_time_s;
  const std::int64_t states = stats.idle_slots + stats.busy_periods;
  MetricsReport report;
  for (const auto& uc : stats.per_up) {
    UpMetrics m;
    m.up = uc.up;
    m.throughput_bps = uc.successes * scenario.phy.framebody_bits / obs;
    m.utilization = uc.payload_airtime_s / obs;
    const double power = uc.energy_j / (uc.nodes * obs);
    m.avg_power_w = power;
    if (states > 0) m.energy_per_state_j = power * obs / static_cast<double>(states);
    if (uc.resolved() > 0) {
      const double resolved = static_cast<double>(uc.resolved());
      m.reliability = static_cast<double>(uc.successes) / resolved;
      m.delay_s = uc.sum_access_delay_s / resolved;
      m.total_delay_s = uc.sum_total_delay_s / resolved;
    }
    report.per_up.push_back(m);
  }
  finish_aggregates(report);
  return report;
}

}  // namespace wban
