#include <doctest.h>

#include <cmath>
#include <random>

#include "wban/error.hpp"
#include "wban/metrics.hpp"

using namespace wban;

namespace {

const PriorityClass& mod_up(int id) {
  static const SchemeConfig s = modified_scheme();
  return s.priority(id);
}

// Term-by-term mean access delay: a frame succeeding at stage j has waited
// sum_{h<=j} (W_h+1)/2 slots; a dropped frame has waited all stages.
double delay_oracle(const std::vector<int>& w, double p, double te) {
  double total = 0, cum = 0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    cum += (w[j] + 1) / 2.0;
    total += std::pow(p, static_cast<double>(j)) * (1 - p) * cum;
  }
  total += std::pow(p, static_cast<double>(w.size())) * cum;
  return total * te;
}

}  // namespace

TEST_CASE("reliability") {
  CHECK(reliability(0.0, 4, 3) == 1.0);
  CHECK(reliability(1.0, 4, 3) == 0.0);
  CHECK(reliability(0.5, 4, 3) == doctest::Approx(0.99609375));
}

TEST_CASE("throughput") {
  CHECK(throughput(0.0, 0.5, 800, 2e-3) == 0.0);
  CHECK(throughput(0.2, 0.5, 800, 2e-3) == doctest::Approx(40000.0));
  CHECK(throughput(0.2, 0.5, 1600, 2e-3) == doctest::Approx(2 * throughput(0.2, 0.5, 800, 2e-3)));
  const std::vector<double> s{1, 2, 3};
  CHECK(aggregate_throughput(s) == doctest::Approx(6.0));
}

TEST_CASE("access delay") {
  const PriorityClass& p = mod_up(6);
  CHECK(access_delay(p, 0.0, 1e-3) == doctest::Approx(1.5e-3));
  const std::vector<int> w{2, 2, 4, 4, 8, 8, 8, 8};
  CHECK(access_delay(p, 0.5, 1e-3) == doctest::Approx(delay_oracle(w, 0.5, 1e-3)).epsilon(1e-12));
  CHECK(access_delay(p, 0.5, 1e-3) == doctest::Approx(3.71484375e-3).epsilon(1e-12));
  CHECK(access_delay(p, 1.0, 1e-3) == doctest::Approx(26.0e-3));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(access_delay(p, std::min(a, b), 1e-3) <= access_delay(p, std::max(a, b), 1e-3) + 1e-15);
  }
}

TEST_CASE("utilization") {
  CHECK(channel_utilization(0.0, 0.5, 823.6e-6, 2e-3) == 0.0);
  CHECK(channel_utilization(0.2, 0.5, 800 / 971.4e3, 2e-3) == doctest::Approx(0.0412).epsilon(1e-3));
  const std::vector<double> u{0.1, 0.2};
  CHECK(total_utilization(u) == doctest::Approx(0.3));
}

TEST_CASE("jain fairness") {
  const std::vector<double> eq{5, 5, 5, 5}, one{0, 0, 3, 0}, ramp{1, 2, 3, 4}, zero{0, 0};
  CHECK(jain_fairness(eq) == doctest::Approx(1.0));
  CHECK(jain_fairness(one) == doctest::Approx(0.25));
  CHECK(jain_fairness(ramp) == doctest::Approx(100.0 / 120.0));
  CHECK_THROWS_AS(jain_fairness(zero), DegenerateInputError);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> s(1 + rng() % 8);
    for (auto& v : s) v = u(rng);
    const double f = jain_fairness(s);
    CHECK(f <= 1.0 + 1e-12);
    CHECK(f >= 1.0 / s.size() - 1e-12);
  }
}

TEST_CASE("energy per state") {
  const TimingParams t;
  const EnergyParams pw;
  const TxDurations tx = tx_durations(AccessMechanism::rts_cts, PhyParams{}, t);

  SolutionReport idle;
  idle.tx = tx;
  idle.p_tran = 0.0;
  ClassSolution c;
  c.p_idle_i = 0.8;
  const EnergyBreakdown e0 = energy(c, idle, AccessMechanism::rts_cts, pw, t);
  CHECK(e0.total() == doctest::Approx(125e-6 * 5e-6 * 0.8));

  EnergyParams pw2 = pw;
  pw2.p_idle_w *= 2;
  CHECK(energy(c, idle, AccessMechanism::rts_cts, pw2, t).total() == doctest::Approx(2 * e0.total()));

  SolutionReport busy;
  busy.tx = tx;
  busy.p_tran = 1.0;
  busy.total_succ = 1.0;
  ClassSolution s;
  s.p_succ = 1.0;
  const double expect = (tx.t_ctrl_s + tx.t_data_s) * 27e-3 + 2 * tx.t_ctrl_s * 1.8e-3 + 3 * 75e-6 * 5e-6;
  CHECK(energy(s, busy, AccessMechanism::rts_cts, pw, t).total() == doctest::Approx(expect).epsilon(1e-12));

  // basic access: DATA on TX, ACK on RX, one SIFS
  const TxDurations btx = tx_durations(AccessMechanism::basic, PhyParams{}, t);
  const ExchangeEnergy b = exchange_energy(AccessMechanism::basic, btx, pw, t);
  CHECK(b.success == doctest::Approx(btx.t_data_s * 27e-3 + btx.t_ctrl_s * 1.8e-3 + 75e-6 * 5e-6));
  CHECK(b.collision == doctest::Approx(b.success));
}

TEST_CASE("analytic metrics ordering and composition") {
  const Scenario sc = default_scenario(SchemeKind::modified, 32);
  const MetricsReport m = analytic_metrics(solve(sc), sc);
  REQUIRE(m.per_up.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(*m.per_up[i].reliability > *m.per_up[i - 1].reliability);
    CHECK(*m.per_up[i].delay_s < *m.per_up[i - 1].delay_s);
  }
  double s = 0;
  for (const auto& u : m.per_up) s += *u.throughput_bps;
  CHECK(*m.aggregate_throughput_bps == doctest::Approx(s));

  // UP7 contends in EAP1 as well: its rates include both phases
  const Scenario st = default_scenario(SchemeKind::standard, 16);
  const SchemeSolution sol = solve(st);
  const MetricsReport ms = analytic_metrics(sol, st);
  double s7 = 0;
  for (const auto& ph : sol.phases)
    for (const auto& um : phase_metrics(ph.report, st))
      if (um.up == 7) s7 += ph.weight * *um.throughput_bps;
  CHECK(*ms.find(7)->throughput_bps == doctest::Approx(s7));
  // UP0 is idle during EAP1
  const auto rap = std::find_if(sol.phases.begin(), sol.phases.end(),
                                [](const PhaseSolution& p) { return p.report.phase == PhaseId::RAP1; });
  double p0 = 0;
  for (const auto& um : phase_metrics(rap->report, st))
    if (um.up == 0) p0 = rap->weight * *um.avg_power_w + (1 - rap->weight) * st.energy.p_idle_w;
  CHECK(*ms.find(0)->avg_power_w == doctest::Approx(p0));
}
