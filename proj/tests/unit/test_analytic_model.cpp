#include <doctest.h>

#include <cmath>
#include <random>

#include "wban/analytic_model.hpp"
#include "wban/error.hpp"

using namespace wban;

namespace {

const PriorityClass& up6() {
  static const SchemeConfig s = modified_scheme();
  return s.priority(6);
}

// Plain-loop evaluation of the model equations at a returned point. Shares
// nothing with the solver beyond the static protocol helpers.
double oracle_residual(const Scenario& sc, const SolutionReport& r) {
  const auto& classes = r.classes;
  double log_idle = 0.0;
  for (const auto& c : classes) log_idle += c.nodes * std::log(1.0 - c.tau);
  const double p_idle = std::exp(log_idle);
  const double p_tran = 1.0 - p_idle;
  const double per = sc.per();
  const TxDurations tx = sc.tx();

  double worst = std::abs(p_idle - r.p_idle);
  double ts = 0, tc = 0, te = 0;
  for (const auto& c : classes) {
    const double acce = c.nodes * c.tau * p_idle / ((1.0 - c.tau) * p_tran);
    ts += acce * (1 - per);
    tc += 1 - acce;
    te += acce * per;
  }
  const double t_e = sc.timing.csma_slot_s * (1 - p_tran) + tx.t_succ_s * p_tran * ts +
                     tx.t_coll_s * p_tran * tc + tx.t_error_s * p_tran * te;

  for (const auto& c : classes) {
    const PriorityClass& p = sc.scheme.priority(c.up);
    const double lock = 1.0 / (r.phase_s / sc.timing.csma_slot_s - tx.t_succ_s / sc.timing.csma_slot_s -
                               mean_backoff(p, BackoffMode::paper_closed_form));
    const double p_idle_i = p_idle / (1.0 - c.tau) * (1.0 - lock);
    const double acce = c.nodes * c.tau * p_idle / ((1.0 - c.tau) * p_tran);
    const double fail = (1.0 - acce) + acce * per;
    const double rho = 1.0 - std::exp(-sc.arrival_rate(c.up) * t_e);

    double geo = 0, mid = 0;
    int w = p.cw_min;
    for (int j = 0; j <= p.m + p.x; ++j) {
      if (j > 0 && j % 2 == 0 && j <= p.m) w *= 2;
      if (j > p.m) w = p.cw_max;
      geo += std::pow(fail, j);
      mid += (w + 1) / 2.0 * std::pow(fail, j);
    }
    const double b000 = 1.0 / (geo + mid / p_idle_i + (1 - rho) / rho);
    const double tau = b000 * geo;

    for (double d : {p_idle_i - c.p_idle_i, acce - c.p_acce, fail - c.p_fail, tau - c.tau, rho - c.rho})
      worst = std::max(worst, std::abs(d));
  }
  return worst;
}

}  // namespace

TEST_CASE("b000 closed values") {
  CHECK(chain_b000(up6(), 0.0, 1.0, 1.0) == doctest::Approx(0.4).epsilon(1e-14));

  const int w[] = {2, 2, 4, 4, 8, 8, 8, 8};
  double mid = 0;
  for (int j = 0; j < 8; ++j) mid += (w[j] + 1) / 2.0 * std::pow(0.5, j);
  CHECK(mid == doctest::Approx(3.71484375));
  CHECK(chain_b000(up6(), 0.5, 1.0, 1.0) == doctest::Approx(1.0 / (1.9921875 + mid)).epsilon(1e-14));

  // (1 - rho)/rho enters only below saturation
  const double sat = chain_b000(up6(), 0.2, 0.7, 1.0);
  const double half = chain_b000(up6(), 0.2, 0.7, 0.5);
  CHECK(1.0 / half - 1.0 / sat == doctest::Approx(1.0));

  CHECK_THROWS_AS(chain_b000(up6(), 0.2, 0.7, 0.0), DegenerateInputError);
  CHECK_THROWS_AS(chain_b000(up6(), 0.2, 0.0, 1.0), DegenerateInputError);
}

TEST_CASE("tau from chain") {
  CHECK(tau_from_chain(up6(), 0.0, 0.3) == doctest::Approx(0.3));
  CHECK(tau_from_chain(up6(), 0.5, 1.0) == doctest::Approx(1.9921875));
  CHECK(tau_from_chain(up6(), 1.0, 0.1) == doctest::Approx(0.8));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double p = u(rng), b = u(rng);
    CHECK(tau_from_chain(up6(), p, b) <= 8 * b * (1 + 1e-12));
  }
}

TEST_CASE("coupling update") {
  const SchemeConfig mod = modified_scheme();
  std::vector<ClassInput> classes;
  for (int id : {0, 2, 4, 6}) classes.push_back({mod.priority(id), 1, 0.5, 0.0});

  const std::vector<double> zeros(4, 0.0);
  const CouplingResult z = coupling_update(zeros, classes, 0.0);
  CHECK(z.p_tran == 0.0);
  CHECK(z.p_idle == 1.0);

  const std::vector<double> same(4, 0.07);
  const CouplingResult s = coupling_update(same, classes, 0.01);
  CHECK(s.p_idle == doctest::Approx(std::pow(0.93, 4)).epsilon(1e-14));
  for (const auto& c : s.classes) {
    CHECK(c.p_coll == doctest::Approx(1 - c.p_acce));
    CHECK(c.p_fail == doctest::Approx(c.p_coll + c.p_error));
  }

  std::vector<ClassInput> single{{mod.priority(6), 1, 0.5, 0.0}};
  const std::vector<double> t{0.3};
  const CouplingResult one = coupling_update(t, single, 0.0);
  CHECK(one.classes[0].p_acce == doctest::Approx(1.0));
  CHECK(one.classes[0].p_fail == doctest::Approx(0.0));
  const std::vector<double> t0{0.0};
  CHECK(coupling_update(t0, single, 0.0).classes[0].p_acce == doctest::Approx(1.0));
}

TEST_CASE("expected state time and queue occupancy") {
  const TxDurations tx = tx_durations(AccessMechanism::rts_cts, PhyParams{}, TimingParams{});
  CHECK(expected_state_time(0, 0, 0, 0, tx, 125e-6) == doctest::Approx(125e-6));
  CHECK(expected_state_time(1, 1, 0, 0, tx, 125e-6) == doctest::Approx(tx.t_succ_s));
  const double te = expected_state_time(0.5, 0.6, 0.3, 0.1, tx, 125e-6);
  CHECK(te == doctest::Approx(62.5e-6 + 0.3 * tx.t_succ_s + 0.15 * tx.t_coll_s + 0.05 * tx.t_error_s));
  CHECK(te == doctest::Approx(1.3968e-3).epsilon(1e-4));

  CHECK(queue_occupancy(0.0, 1e-3) == 0.0);
  CHECK(queue_occupancy(1e9, 1.0) == doctest::Approx(1.0));
  const double x = 0.5e-3;
  CHECK(queue_occupancy(0.5, 1e-3) == doctest::Approx(x - x * x / 2 + x * x * x / 6).epsilon(1e-12));
  CHECK(queue_occupancy(0.5, 1e-3) == doctest::Approx(4.99875e-4).epsilon(1e-6));
}

TEST_CASE("single ideal node has no failures") {
  Scenario sc = default_scenario(SchemeKind::modified, 4);
  sc.node_counts = {{0, 0}, {2, 0}, {4, 0}, {6, 1}};
  sc.channel.ber = 0.0;
  const SchemeSolution sol = solve(sc);
  REQUIRE(sol.phases.size() == 1);
  const ClassSolution* c = sol.phases[0].report.find(6);
  REQUIRE(c);
  CHECK(c->p_fail == doctest::Approx(0.0));
  CHECK(c->p_drop == doctest::Approx(0.0));
}

TEST_CASE("modified scheme at n=32 converges to an oracle-consistent point") {
  const Scenario sc = default_scenario(SchemeKind::modified, 32);
  const SchemeSolution sol = solve(sc);
  const SolutionReport& r = sol.phases[0].report;
  CHECK(r.residual <= 1e-10);
  CHECK(oracle_residual(sc, r) < 1e-8);
  CHECK(r.find(0)->tau < r.find(2)->tau);
  CHECK(r.find(2)->tau < r.find(4)->tau);
  CHECK(r.find(4)->tau < r.find(6)->tau);

  SolverOptions other;
  other.initial = InitialGuess::uniform(1e-3);
  const SolutionReport r2 = solve(sc, other).phases[0].report;
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    const auto& a = r.classes[i];
    const auto& b = r2.classes[i];
    CHECK(std::abs(a.tau - b.tau) < 1e-6);
    CHECK(std::abs(a.rho - b.rho) < 1e-6);
    CHECK(std::abs(a.p_fail - b.p_fail) < 1e-6);
    CHECK(std::abs(a.p_acce - b.p_acce) < 1e-6);
    CHECK(std::abs(a.p_idle_i - b.p_idle_i) < 1e-6);
  }
}

TEST_CASE("identities and chain normalization across the node sweep") {
  for (SchemeKind kind : {SchemeKind::modified, SchemeKind::standard}) {
    for (int n = 8; n <= 64; n += 8) {
      const Scenario sc = default_scenario(kind, n);
      for (const auto& ph : solve(sc).phases) {
        const SolutionReport& r = ph.report;
        CAPTURE(n);
        CHECK(r.p_tran + r.p_idle == 1.0);
        CHECK(oracle_residual(sc, r) < 1e-8);
        for (const auto& c : r.classes) {
          CHECK(c.p_coll == 1.0 - c.p_acce);
          CHECK(c.p_fail == c.p_coll + c.p_error);
          for (double v : {c.p_idle_i, c.p_acce, c.p_fail, c.tau, c.rho}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
          }
          const ChainDistribution d = reconstruct_chain(sc.scheme.priority(c.up), c);
          CHECK(std::abs(d.total() - 1.0) <= 1e-9);
        }
      }
    }
  }
}

TEST_CASE("failure probability grows with the network") {
  double prev[4] = {0, 0, 0, 0};
  for (int n : {8, 16, 32, 64}) {
    const SolutionReport r = solve(default_scenario(SchemeKind::modified, n)).phases[0].report;
    for (int i = 0; i < 4; ++i) {
      CHECK(r.classes[i].p_fail >= prev[i]);
      prev[i] = r.classes[i].p_fail;
    }
  }
}

TEST_CASE("zero ber removes error transmissions") {
  Scenario sc = default_scenario(SchemeKind::modified, 16);
  sc.channel.ber = 0.0;
  for (const auto& c : solve(sc).phases[0].report.classes) {
    CHECK(c.p_error == 0.0);
    CHECK(c.p_fail == c.p_coll);
  }
}

TEST_CASE("reconstructed chain endpoints") {
  const Scenario sc = default_scenario(SchemeKind::modified, 16);
  const SolutionReport r = solve(sc).phases[0].report;
  const ClassSolution& c = *r.find(2);
  const PriorityClass& p = sc.scheme.priority(2);
  const ChainDistribution d = reconstruct_chain(p, c);
  for (int j = 0; j <= p.last_stage(); ++j) {
    const int w = contention_window(p, j);
    REQUIRE(static_cast<int>(d.stages[j].size()) == w + 1);
    CHECK(d.stages[j][w] == doctest::Approx(std::pow(c.p_fail, j) / c.p_idle_i * c.b000 / w));
    CHECK(d.stages[j][0] == doctest::Approx(std::pow(c.p_fail, j) * c.b000));
  }
  double row0 = 0;
  for (int k = 1; k <= p.cw_min; ++k) row0 += d.stages[0][k];
  CHECK(row0 == doctest::Approx((p.cw_min + 1) / 2.0 * c.b000 / c.p_idle_i));
  CHECK(d.empty == doctest::Approx((1 - c.rho) / c.rho * c.b000));

  ClassSolution sat = c;
  sat.rho = 1.0;
  CHECK(reconstruct_chain(p, sat).empty == 0.0);
}

TEST_CASE("zero arrival rate class is dropped with a warning") {
  Scenario sc = default_scenario(SchemeKind::modified, 16);
  sc.channel.arrival_rate_pkts_per_s[0] = 0.0;
  const SchemeSolution sol = solve(sc);
  CHECK(sol.phases[0].report.find(0) == nullptr);
  CHECK_FALSE(sol.warnings.empty());
}

TEST_CASE("non-convergence is reported") {
  SolverOptions o;
  o.max_iterations = 2;
  CHECK_THROWS_AS(solve(default_scenario(SchemeKind::modified, 32), o), ConvergenceError);
}

TEST_CASE("phase too short to host backoff is infeasible") {
  Scenario sc = default_scenario(SchemeKind::modified, 8);
  sc.scheme.set_phase_duration(PhaseId::RAP, 0.005);
  CHECK_THROWS_AS(solve(sc), InfeasiblePhaseError);
}

TEST_CASE("standard scheme solves EAP1 with UP7 only") {
  const SchemeSolution sol = solve(default_scenario(SchemeKind::standard, 16));
  REQUIRE(sol.phases.size() == 2);
  double w = 0;
  for (const auto& ph : sol.phases) {
    w += ph.weight;
    if (ph.report.phase == PhaseId::EAP1) {
      REQUIRE(ph.report.classes.size() == 1);
      CHECK(ph.report.classes[0].up == 7);
      CHECK(ph.weight == doctest::Approx(0.1 / 0.9));
    } else {
      CHECK(ph.report.classes.size() == 8);
    }
  }
  CHECK(w == doctest::Approx(1.0));
}
