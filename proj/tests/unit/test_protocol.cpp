#include <doctest.h>

#include <cmath>
#include <random>

#include "wban/error.hpp"
#include "wban/protocol.hpp"

using namespace wban;

namespace {

const PriorityClass& up(const SchemeConfig& s, int id) { return s.priority(id); }

// Straight enumeration of the window recursion, used as an oracle.
std::vector<int> enumerate_windows(int cw_min, int cw_max, int retry) {
  std::vector<int> w{cw_min};
  for (int j = 1; j <= retry; ++j) {
    int next = w.back();
    if (j % 2 == 0) next *= 2;
    w.push_back(std::min(next, cw_max));
  }
  return w;
}

double us(double s) { return s * 1e6; }

}  // namespace

TEST_CASE("contention window follows the doubling rule") {
  const SchemeConfig mod = modified_scheme();
  CHECK(contention_window(up(mod, 0), 0) == 16);
  CHECK(contention_window(up(mod, 0), 3) == 32);
  CHECK(contention_window(up(mod, 0), 4) == 64);
  CHECK(contention_window(up(mod, 6), 1) == 2);
  CHECK_THROWS_AS(contention_window(up(mod, 0), -1), ContractViolation);
  CHECK_THROWS_AS(contention_window(up(mod, 0), 8), ContractViolation);
}

TEST_CASE("window schedule matches enumeration for every preset class") {
  for (const auto& scheme : {standard_scheme(), modified_scheme()}) {
    for (const auto& p : scheme.priorities) {
      CAPTURE(p.id);
      CHECK(window_schedule(p) == enumerate_windows(p.cw_min, p.cw_max, kDefaultRetryLimit));
      CHECK(p.attempts() == kDefaultRetryLimit + 1);
    }
  }
}

TEST_CASE("stage limits") {
  auto check = [](int lo, int hi, int r, int m, int x) {
    const StageLimits s = derive_stage_limits(lo, hi, r);
    CHECK(s.m == m);
    CHECK(s.x == x);
  };
  check(16, 64, 7, 4, 3);
  check(16, 32, 7, 2, 5);
  check(1, 4, 7, 4, 3);
  check(8, 8, 7, 0, 7);
  CHECK_THROWS(derive_stage_limits(1, 64, 7));  // needs m = 12
  CHECK_THROWS(derive_stage_limits(16, 48, 7));
  CHECK_THROWS(derive_stage_limits(0, 4, 7));
}

TEST_CASE("stage limits property: m is the first even stage at cw_max") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int lo = 1 << (rng() % 6);
    const int hi = lo << (rng() % 4);
    const int retry = 6 + static_cast<int>(rng() % 6);
    const StageLimits s = derive_stage_limits(lo, hi, retry);
    CHECK(s.m % 2 == 0);
    CHECK((lo << (s.m / 2)) >= hi);
    if (s.m > 0) CHECK((lo << ((s.m - 2) / 2)) < hi);
    CHECK(s.m + s.x == retry);
  }
}

TEST_CASE("preset class windows and permissions") {
  const SchemeConfig std_s = standard_scheme();
  const int mins[] = {16, 16, 8, 8, 4, 4, 2, 1};
  const int maxs[] = {64, 32, 32, 16, 16, 8, 8, 4};
  for (int i = 0; i < 8; ++i) {
    CHECK(up(std_s, i).cw_min == mins[i]);
    CHECK(up(std_s, i).cw_max == maxs[i]);
  }
  CHECK(up(std_s, 7).permitted_in(PhaseId::EAP1));
  CHECK_FALSE(up(std_s, 6).permitted_in(PhaseId::EAP1));
  CHECK(up(std_s, 0).permitted_in(PhaseId::RAP1));
}

TEST_CASE("frame durations") {
  const PhyParams phy;
  const double data = 90 / 600e3 + 31 / 91.9e3 + (56 + 800 + 16) / 971.4e3;
  CHECK(data_frame_duration(phy) == doctest::Approx(data).epsilon(1e-12));
  CHECK(us(data_frame_duration(phy)) == doctest::Approx(1385.0).epsilon(1e-3));
  CHECK(control_frame_bits(phy) == 193);
  CHECK(us(control_frame_duration(phy)) == doctest::Approx(561.4).epsilon(1e-3));

  PhyParams empty = phy;
  empty.framebody_bits = 0;
  CHECK(us(data_frame_duration(empty)) == doctest::Approx(561.4).epsilon(1e-3));

  PhyParams twice = phy;
  twice.framebody_bits = 1600;
  CHECK(data_frame_duration(twice) - data_frame_duration(phy) ==
        doctest::Approx(800 / 971.4e3).epsilon(1e-12));

  PhyParams fast = phy;
  fast.rate_psdu_bps = 1e30;
  CHECK(control_frame_duration(fast) == doctest::Approx(90 / 600e3 + 31 / 91.9e3).epsilon(1e-12));
}

TEST_CASE("transaction durations") {
  const PhyParams phy;
  const TimingParams t;
  const double data = data_frame_duration(phy), ctrl = control_frame_duration(phy);

  const TxDurations rts = tx_durations(AccessMechanism::rts_cts, phy, t);
  CHECK(rts.t_succ_s == doctest::Approx(3 * ctrl + data + 3 * t.sifs_s + 4 * t.prop_delay_s));
  CHECK(us(rts.t_succ_s) == doctest::Approx(3 * 561.443 + 1384.997 + 229).epsilon(1e-6));
  CHECK(std::abs(rts.t_coll_s - 1.1998e-3) < 0.1e-6);
  CHECK(rts.t_error_s == rts.t_succ_s);

  const TxDurations basic = tx_durations(AccessMechanism::basic, phy, t);
  CHECK(basic.t_succ_s == basic.t_coll_s);
  CHECK(us(basic.t_succ_s) == doctest::Approx(1385.0 + 75 + 561.4 + 2).epsilon(1e-4));
  CHECK(basic.t_error_s == basic.t_succ_s);
}

TEST_CASE("packet error rate") {
  const PhyParams phy;
  CHECK(packet_error_rate(AccessMechanism::rts_cts, phy, 0.0) == 0.0);
  CHECK(packet_error_rate(AccessMechanism::rts_cts, phy, 2e-5) ==
        doctest::Approx(1 - std::pow(1 - 2e-5, 3 * 193 + 993)).epsilon(1e-12));
  CHECK(packet_error_rate(AccessMechanism::rts_cts, phy, 2e-5) == doctest::Approx(0.03095).epsilon(1e-3));
  CHECK(packet_error_rate(AccessMechanism::basic, phy, 2e-5) == doctest::Approx(0.02344).epsilon(1e-3));
}

TEST_CASE("mean backoff") {
  const SchemeConfig mod = modified_scheme();
  CHECK(mean_backoff(up(mod, 0), BackoffMode::paper_closed_form) == doctest::Approx(38.25));
  CHECK(mean_backoff(up(mod, 0), BackoffMode::stage_average) == doctest::Approx(22.5));

  const PriorityClass flat = make_priority_class(9, 8, 8, 7, {PhaseId::RAP});
  CHECK(flat.m == 0);
  CHECK(mean_backoff(flat, BackoffMode::stage_average) == doctest::Approx(4.5));
}

TEST_CASE("lock probability") {
  const SchemeConfig mod = modified_scheme();
  const PriorityClass& p = up(mod, 0);
  const TxDurations tx = tx_durations(AccessMechanism::rts_cts, PhyParams{}, TimingParams{});
  const double slot = 125e-6;
  const double l_succ = tx.t_succ_s / slot;
  CHECK(l_succ == doctest::Approx(26.386).epsilon(1e-4));

  const double p_lock = lock_probability(p, 0.9, slot, tx.t_succ_s, BackoffMode::paper_closed_form);
  CHECK(p_lock == doctest::Approx(1.0 / (7200 - l_succ - 38.25)).epsilon(1e-12));
  CHECK(p_lock == doctest::Approx(1.4015e-4).epsilon(1e-4));

  CHECK(lock_probability(p, 1e6, slot, tx.t_succ_s, BackoffMode::paper_closed_form) < 1e-9);

  const double boundary = (l_succ + 38.25 + 1) * slot;
  CHECK(lock_probability(p, boundary, slot, tx.t_succ_s, BackoffMode::paper_closed_form) ==
        doctest::Approx(1.0));
  CHECK_THROWS_AS(lock_probability(p, 0.5 * boundary, slot, tx.t_succ_s, BackoffMode::paper_closed_form),
                  InfeasiblePhaseError);
}

TEST_CASE("scheme validation") {
  SchemeConfig s = modified_scheme();
  CHECK_NOTHROW(validate(s));
  s.access = AccessMechanism::basic;
  CHECK_THROWS_AS(validate(s), ValidationError);

  SchemeConfig z = modified_scheme(0.0);
  CHECK_THROWS_AS(validate(z), ValidationError);

  SchemeConfig st = standard_scheme();
  CHECK_NOTHROW(validate(st));
  CHECK(st.contention_time_s() == doctest::Approx(0.9));
  CHECK_THROWS_AS(st.set_phase_duration(PhaseId::RAP, 1.0), ValidationError);
}

TEST_CASE("enum round trips") {
  for (auto k : {PhaseId::EAP1, PhaseId::RAP1, PhaseId::MAP1, PhaseId::EAP2, PhaseId::RAP2,
                 PhaseId::MAP2, PhaseId::CAP, PhaseId::RAP, PhaseId::MAP})
    CHECK(phase_id_from_string(to_string(k)) == k);
  CHECK(scheme_kind_from_string("standard") == SchemeKind::standard);
  CHECK(access_mechanism_from_string("rts_cts") == AccessMechanism::rts_cts);
  CHECK(backoff_mode_from_string("stage_average") == BackoffMode::stage_average);
}
