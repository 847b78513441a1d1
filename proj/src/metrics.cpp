#include "wban/metrics.hpp"

#include <cmath>
#include <numeric>

#include "wban/error.hpp"

namespace wban {

double reliability(double p_fail, int m, int x) {
  if (!(p_fail >= 0.0 && p_fail <= 1.0)) throw ContractViolation("p_fail must lie in [0, 1]");
  return 1.0 - std::pow(p_fail, m + x + 1);
}

double throughput(double p_succ_i, double p_tran, double framebody_bits, double t_e_s) {
  if (!(t_e_s > 0.0)) throw ContractViolation("state time must be > 0");
  return p_succ_i * p_tran * framebody_bits / t_e_s;
}

double aggregate_throughput(std::span<const double> per_up) {
  return std::accumulate(per_up.begin(), per_up.end(), 0.0);
}

double total_utilization(std::span<const double> per_up) {
  return std::accumulate(per_up.begin(), per_up.end(), 0.0);
}

double access_delay(const PriorityClass& p, double p_fail, double t_e_s) {
  if (!(p_fail >= 0.0 && p_fail <= 1.0)) throw ContractViolation("p_fail must lie in [0, 1]");
  double delay = 0.0;
  double backoff = 0.0;  // cumulative mean backoff through stage j
  double pj = 1.0;
  for (int j = 0; j <= p.last_stage(); ++j) {
    backoff += (contention_window(p, j) + 1) / 2.0;
    delay += pj * (1.0 - p_fail) * backoff;
    pj *= p_fail;
  }
  // pj is now p_fail^(m+x+1); dropped frames waited through every stage.
  delay += pj * backoff;
  return delay * t_e_s;
}

double channel_utilization(double p_succ_i, double p_tran, double t_framebody_s, double t_e_s) {
  if (!(t_e_s > 0.0)) throw ContractViolation("state time must be > 0");
  return p_succ_i * p_tran * t_framebody_s / t_e_s;
}

double jain_fairness(std::span<const double> per_up) {
  double sum = 0.0, sum_sq = 0.0;
  for (double s : per_up) {
    sum += s;
    sum_sq += s * s;
  }
  if (per_up.empty() || sum_sq <= 0.0)
    throw DegenerateInputError("Jain's index is undefined when every throughput is zero");
  return sum * sum / (static_cast<double>(per_up.size()) * sum_sq);
}

ExchangeEnergy exchange_energy(AccessMechanism access, const TxDurations& tx,
                               const EnergyParams& power, const TimingParams& timing) {
  // TX on RTS and DATA, RX on CTS and ACK, idle across SIFS gaps.
  ExchangeEnergy e;
  if (access == AccessMechanism::rts_cts) {
    e.success = (tx.t_ctrl_s + tx.t_data_s) * power.p_tx_w + 2.0 * tx.t_ctrl_s * power.p_rx_w +
                3.0 * timing.sifs_s * power.p_idle_w;
    e.collision = tx.t_ctrl_s * power.p_tx_w + tx.t_ctrl_s * power.p_rx_w +
                  timing.sifs_s * power.p_idle_w;
  } else {
    e.success = tx.t_data_s * power.p_tx_w + tx.t_ctrl_s * power.p_rx_w +
                timing.sifs_s * power.p_idle_w;
    e.collision = e.success;
  }
  return e;
}

EnergyBreakdown energy(const ClassSolution& cls, const SolutionReport& phase,
                       AccessMechanism access, const EnergyParams& power,
                       const TimingParams& timing) {
  const TxDurations& tx = phase.tx;
  const ExchangeEnergy own = exchange_energy(access, tx, power, timing);
  const double busy = phase.p_tran;
  EnergyBreakdown e;
  e.idle = timing.csma_slot_s * power.p_idle_w * cls.p_idle_i;
  e.succ = own.success * busy * cls.p_succ +
           tx.t_succ_s * power.p_idle_w * busy * (phase.total_succ - cls.p_succ);
  e.coll = own.collision * busy * cls.p_coll +
           tx.t_coll_s * power.p_idle_w * busy * (phase.total_coll - cls.p_coll);
  e.error = own.success * busy * cls.p_error +
            tx.t_succ_s * power.p_idle_w * busy * (phase.total_error - cls.p_error);
  return e;
}

const UpMetrics* MetricsReport::find(int up) const {
  for (const auto& m : per_up)
    if (m.up == up) return &m;
  return nullptr;
}

std::vector<UpMetrics> phase_metrics(const SolutionReport& phase, const Scenario& scenario) {
  std::vector<UpMetrics> out;
  const double t_body = framebody_duration(scenario.phy);
  for (const auto& c : phase.classes) {
    const PriorityClass& cls = scenario.scheme.priority(c.up);
    UpMetrics m;
    m.up = c.up;
    m.reliability = reliability(c.p_fail, cls.m, cls.x);
    m.throughput_bps = throughput(c.p_succ, phase.p_tran, scenario.phy.framebody_bits, phase.t_e_s);
    m.delay_s = access_delay(cls, c.p_fail, phase.t_e_s);
    const double e = energy(c, phase, scenario.scheme.access, scenario.energy, scenario.timing).total();
    m.energy_per_state_j = e;
    m.avg_power_w = e / phase.t_e_s;
    m.utilization = channel_utilization(c.p_succ, phase.p_tran, t_body, phase.t_e_s);
    out.push_back(m);
  }
  return out;
}

void finish_aggregates(MetricsReport& report) {
  std::vector<double> s, u;
  for (const auto& m : report.per_up) {
    if (m.throughput_bps) s.push_back(*m.throughput_bps);
    if (m.utilization) u.push_back(*m.utilization);
  }
  report.aggregate_throughput_bps.reset();
  report.utilization.reset();
  report.jain.reset();
  if (!s.empty()) report.aggregate_throughput_bps = aggregate_throughput(s);
  if (!u.empty()) report.utilization = total_utilization(u);
  if (!s.empty() && *report.aggregate_throughput_bps > 0.0) report.jain = jain_fairness(s);
}

MetricsReport analytic_metrics(const SchemeSolution& solution, const Scenario& scenario) {
  std::vector<std::vector<UpMetrics>> per_phase;
  for (const auto& ph : solution.phases) per_phase.push_back(phase_metrics(ph.report, scenario));

  MetricsReport report;
  for (const auto& cls : scenario.scheme.priorities) {
    if (scenario.nodes(cls.id) == 0) continue;
    UpMetrics out;
    out.up = cls.id;
    double weight = 0.0;
    double r = 0, s = 0, d = 0, e = 0, p = 0, u = 0;
    for (std::size_t i = 0; i < solution.phases.size(); ++i) {
      const double w = solution.phases[i].weight;
      for (const auto& m : per_phase[i]) {
        if (m.up != cls.id) continue;
        weight += w;
        r += w * *m.reliability;
        s += w * *m.throughput_bps;
        d += w * *m.delay_s;
        e += w * *m.energy_per_state_j;
        p += w * *m.avg_power_w;
        u += w * *m.utilization;
      }
    }
    if (weight > 0.0) {
      out.reliability = r / weight;
      out.delay_s = d / weight;
      out.energy_per_state_j = e / weight;
      out.throughput_bps = s;
      out.utilization = u;
      out.avg_power_w = p + (1.0 - weight) * scenario.energy.p_idle_w;
    }
    report.per_up.push_back(out);
  }
  finish_aggregates(report);
  return report;
}

}  // namespace wban
