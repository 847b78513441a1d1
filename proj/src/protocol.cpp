#include "wban/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "wban/error.hpp"

namespace wban {

namespace {

struct PhaseName {
  PhaseId id;
  std::string_view name;
};

constexpr PhaseName kPhaseNames[] = {
    {PhaseId::EAP1, "EAP1"}, {PhaseId::RAP1, "RAP1"}, {PhaseId::MAP1, "MAP1"},
    {PhaseId::EAP2, "EAP2"}, {PhaseId::RAP2, "RAP2"}, {PhaseId::MAP2, "MAP2"},
    {PhaseId::CAP, "CAP"},   {PhaseId::RAP, "RAP"},   {PhaseId::MAP, "MAP"},
};

bool is_power_of_two_multiple(int base, int value) {
  if (base < 1 || value < base || value % base != 0) return false;
  const int ratio = value / base;
  return (ratio & (ratio - 1)) == 0;
}

}  // namespace

std::string_view to_string(SchemeKind k) {
  return k == SchemeKind::standard ? "standard" : "modified";
}

std::string_view to_string(AccessMechanism a) {
  return a == AccessMechanism::basic ? "basic" : "rts_cts";
}

std::string_view to_string(PhaseId p) {
  for (const auto& pn : kPhaseNames)
    if (pn.id == p) return pn.name;
  return "?";
}

std::string_view to_string(BackoffMode m) {
  return m == BackoffMode::paper_closed_form ? "paper_closed_form" : "stage_average";
}

SchemeKind scheme_kind_from_string(std::string_view s) {
  if (s == "standard") return SchemeKind::standard;
  if (s == "modified") return SchemeKind::modified;
  throw ValidationError("scheme", "expected 'standard' or 'modified', got '" + std::string(s) + "'");
}

AccessMechanism access_mechanism_from_string(std::string_view s) {
  if (s == "basic") return AccessMechanism::basic;
  if (s == "rts_cts") return AccessMechanism::rts_cts;
  throw ValidationError("access_mechanism",
                        "expected 'basic' or 'rts_cts', got '" + std::string(s) + "'");
}

PhaseId phase_id_from_string(std::string_view s) {
  for (const auto& pn : kPhaseNames)
    if (pn.name == s) return pn.id;
  throw ValidationError("phases", "unknown phase '" + std::string(s) + "'");
}

BackoffMode backoff_mode_from_string(std::string_view s) {
  if (s == "paper_closed_form") return BackoffMode::paper_closed_form;
  if (s == "stage_average") return BackoffMode::stage_average;
  throw ValidationError("solver.backoff_mode", "unknown mode '" + std::string(s) + "'");
}

bool is_contention_phase(PhaseId p) {
  switch (p) {
    case PhaseId::MAP1:
    case PhaseId::MAP2:
    case PhaseId::MAP:
      return false;
    default:
      return true;
  }
}

const PriorityClass& SchemeConfig::priority(int up_id) const {
  for (const auto& p : priorities)
    if (p.id == up_id) return p;
  throw ContractViolation("scheme has no user priority " + std::to_string(up_id));
}

bool SchemeConfig::has_priority(int up_id) const {
  return std::any_of(priorities.begin(), priorities.end(),
                     [&](const PriorityClass& p) { return p.id == up_id; });
}

double SchemeConfig::contention_time_s() const {
  double total = 0.0;
  for (const auto& ph : phases)
    if (is_contention_phase(ph.id)) total += ph.duration_s;
  return total;
}

double SchemeConfig::superframe_s() const {
  double total = 0.0;
  for (const auto& ph : phases) total += ph.duration_s;
  return total;
}

double SchemeConfig::phase_duration(PhaseId id) const {
  for (const auto& ph : phases)
    if (ph.id == id) return ph.duration_s;
  return 0.0;
}

void SchemeConfig::set_phase_duration(PhaseId id, double seconds) {
  for (auto& ph : phases) {
    if (ph.id == id) {
      ph.duration_s = seconds;
      return;
    }
  }
  throw ValidationError("phases", "phase " + std::string(to_string(id)) +
                                      " does not belong to the " + std::string(to_string(kind)) +
                                      " superframe");
}

StageLimits derive_stage_limits(int cw_min, int cw_max, int retry_limit) {
  if (!is_power_of_two_multiple(cw_min, cw_max))
    throw ContractViolation("cw_max must be cw_min times a power of two");
  if (retry_limit < 0) throw ContractViolation("retry limit must be non-negative");
  int m = 0;
  while ((cw_min << (m / 2)) < cw_max) m += 2;
  if (retry_limit < m)
    throw ValidationError("retry_limit", "retry limit " + std::to_string(retry_limit) +
                                             " is below the doubling stage count " +
                                             std::to_string(m));
  return {m, retry_limit - m};
}

PriorityClass make_priority_class(int id, int cw_min, int cw_max, int retry_limit,
                                  std::set<PhaseId> phases) {
  const auto [m, x] = derive_stage_limits(cw_min, cw_max, retry_limit);
  return PriorityClass{id, cw_min, cw_max, m, x, std::move(phases)};
}

int contention_window(const PriorityClass& p, int stage) {
  if (stage < 0 || stage > p.last_stage())
    throw ContractViolation("backoff stage " + std::to_string(stage) + " outside [0, " +
                            std::to_string(p.last_stage()) + "]");
  if (stage > p.m) return p.cw_max;
  // Even stages double, odd stages repeat the previous window.
  const int w = p.cw_min << (stage / 2);
  return std::min(w, p.cw_max);
}

std::vector<int> window_schedule(const PriorityClass& p) {
  std::vector<int> w(static_cast<std::size_t>(p.attempts()));
  for (int j = 0; j <= p.last_stage(); ++j) w[static_cast<std::size_t>(j)] = contention_window(p, j);
  return w;
}

// Table lengths are already bits, so no octet conversion is applied.
double data_frame_duration(const PhyParams& phy) {
  return phy.preamble_bits / phy.rate_symbol_bps + phy.phy_header_bits / phy.rate_plcp_bps +
         (phy.mac_header_bits + phy.framebody_bits + phy.fcs_bits) / phy.rate_psdu_bps;
}

double control_frame_duration(const PhyParams& phy) {
  return phy.preamble_bits / phy.rate_symbol_bps + phy.phy_header_bits / phy.rate_plcp_bps +
         (phy.mac_header_bits + phy.fcs_bits) / phy.rate_psdu_bps;
}

double data_frame_bits(const PhyParams& phy) {
  return phy.preamble_bits + phy.phy_header_bits + phy.mac_header_bits + phy.framebody_bits +
         phy.fcs_bits;
}

double control_frame_bits(const PhyParams& phy) {
  return phy.preamble_bits + phy.phy_header_bits + phy.mac_header_bits + phy.fcs_bits;
}

double framebody_duration(const PhyParams& phy) { return phy.framebody_bits / phy.rate_psdu_bps; }

TxDurations tx_durations(AccessMechanism access, const PhyParams& phy, const TimingParams& timing) {
  TxDurations d;
  d.t_data_s = data_frame_duration(phy);
  d.t_ctrl_s = control_frame_duration(phy);
  const double sifs = timing.sifs_s;
  const double alpha = timing.prop_delay_s;
  if (access == AccessMechanism::rts_cts) {
    d.t_coll_s = 2 * d.t_ctrl_s + sifs + 2 * alpha;
    d.t_succ_s = 3 * d.t_ctrl_s + d.t_data_s + 3 * sifs + 4 * alpha;
  } else {
    // DATA + SIFS + ACK; a collision occupies the channel just as long.
    d.t_succ_s = d.t_data_s + sifs + d.t_ctrl_s + 2 * alpha;
    d.t_coll_s = d.t_succ_s;
  }
  d.t_error_s = d.t_succ_s;
  return d;
}

double packet_error_rate(AccessMechanism access, const PhyParams& phy, double ber) {
  if (!(ber >= 0.0 && ber < 1.0)) throw ContractViolation("ber must lie in [0, 1)");
  const double bits = access == AccessMechanism::rts_cts
                          ? 3 * control_frame_bits(phy) + data_frame_bits(phy)
                          : control_frame_bits(phy) + data_frame_bits(phy);
  return -std::expm1(bits * std::log1p(-ber));
}

double mean_backoff(const PriorityClass& p, BackoffMode mode) {
  const double stages = p.attempts();
  if (mode == BackoffMode::paper_closed_form) {
    const double w = p.cw_min;
    const double half_m = p.m / 2.0;
    const double pow_half_m = std::exp2(half_m);
    return (half_m + w * (pow_half_m - 1.0) + (p.x + 1) * w * std::exp2(half_m + 1.0) / 2.0) /
           stages;
  }
  double sum = 0.0;
  for (int w : window_schedule(p)) sum += (w + 1) / 2.0;
  return sum / stages;
}

double lock_probability(const PriorityClass& p, double phase_s, double slot_s, double t_succ_s,
                        BackoffMode mode) {
  if (!(slot_s > 0.0) || !(phase_s > 0.0)) throw ContractViolation("phase and slot must be positive");
  const double l_phase = phase_s / slot_s;
  const double l_succ = t_succ_s / slot_s;
  const double denom = l_phase - l_succ - mean_backoff(p, mode);
  if (denom < 1.0 - 1e-9)
    throw InfeasiblePhaseError("phase of " + std::to_string(phase_s) + " s is too short for UP" +
                               std::to_string(p.id) + " (L_phase - L_succ - C = " +
                               std::to_string(denom) + " slots)");
  return std::min(1.0, 1.0 / denom);
}

void validate(const PriorityClass& p) {
  const std::string field = "priorities[" + std::to_string(p.id) + "]";
  if (p.cw_min < 1) throw ValidationError(field + ".cw_min", "must be >= 1");
  if (!is_power_of_two_multiple(p.cw_min, p.cw_max))
    throw ValidationError(field + ".cw_max", "must be cw_min times a power of two");
  if (p.m < 0 || p.m % 2 != 0 || p.x < 0)
    throw ValidationError(field + ".m", "stage limits must be non-negative with even m");
  if ((p.cw_min << (p.m / 2)) < p.cw_max || (p.m >= 2 && (p.cw_min << (p.m / 2 - 1)) >= p.cw_max))
    throw ValidationError(field + ".m", "m is not the first even stage reaching cw_max");
}

void validate(const SchemeConfig& s) {
  const bool standard = s.kind == SchemeKind::standard;
  if (standard && s.access != AccessMechanism::basic)
    throw ValidationError("access_mechanism", "standard scheme uses basic access");
  if (!standard && s.access != AccessMechanism::rts_cts)
    throw ValidationError("access_mechanism", "modified scheme uses rts_cts access");

  const std::vector<int> expected_ids =
      standard ? std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7} : std::vector<int>{0, 2, 4, 6};
  std::vector<int> ids;
  for (const auto& p : s.priorities) {
    validate(p);
    ids.push_back(p.id);
  }
  std::sort(ids.begin(), ids.end());
  if (ids != expected_ids) throw ValidationError("priorities", "wrong user-priority set for scheme");

  bool any_contention = false;
  for (const auto& ph : s.phases) {
    const bool standard_phase = ph.id != PhaseId::RAP && ph.id != PhaseId::MAP;
    const bool modified_phase =
        ph.id == PhaseId::RAP || ph.id == PhaseId::MAP || ph.id == PhaseId::CAP;
    if ((standard && !standard_phase) || (!standard && !modified_phase))
      throw ValidationError("phases", std::string(to_string(ph.id)) + " is not part of this superframe");
    if (!(ph.duration_s >= 0.0) || !std::isfinite(ph.duration_s))
      throw ValidationError("phases." + std::string(to_string(ph.id)), "duration must be >= 0");
    if (is_contention_phase(ph.id) && ph.duration_s > 0.0) any_contention = true;
  }
  if (!any_contention) throw ValidationError("phases", "no contention phase has positive duration");
}

void validate(const PhyParams& phy) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("phy.") + name, "must be > 0");
  };
  positive(phy.preamble_bits, "preamble_bits");
  positive(phy.phy_header_bits, "phy_header_bits");
  positive(phy.mac_header_bits, "mac_header_bits");
  positive(phy.fcs_bits, "fcs_bits");
  positive(phy.framebody_bits, "framebody_bits");
  positive(phy.rate_symbol_bps, "rate_symbol_bps");
  positive(phy.rate_plcp_bps, "rate_plcp_bps");
  positive(phy.rate_psdu_bps, "rate_psdu_bps");
}

void validate(const TimingParams& t) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string("timing.") + name, "must be > 0");
  };
  positive(t.csma_slot_s, "csma_slot_s");
  positive(t.sifs_s, "sifs_s");
  positive(t.prop_delay_s, "prop_delay_s");
}

void validate(const EnergyParams& e) {
  auto non_negative = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(std::string("energy.") + name, "must be >= 0");
  };
  non_negative(e.p_tx_w, "p_tx_w");
  non_negative(e.p_rx_w, "p_rx_w");
  non_negative(e.p_idle_w, "p_idle_w");
}

SchemeConfig standard_scheme(double eap1_s, double rap1_s, int retry_limit) {
  const std::set<PhaseId> shared{PhaseId::RAP1, PhaseId::RAP2, PhaseId::CAP};
  std::set<PhaseId> emergency = shared;
  emergency.insert({PhaseId::EAP1, PhaseId::EAP2});

  struct Row {
    int id, cw_min, cw_max;
  };
  constexpr Row table[] = {{0, 16, 64}, {1, 16, 32}, {2, 8, 32}, {3, 8, 16},
                           {4, 4, 16},  {5, 4, 8},   {6, 2, 8},  {7, 1, 4}};
  SchemeConfig s;
  s.kind = SchemeKind::standard;
  s.access = AccessMechanism::basic;
  for (const auto& r : table)
    s.priorities.push_back(
        make_priority_class(r.id, r.cw_min, r.cw_max, retry_limit, r.id == 7 ? emergency : shared));
  s.phases = {{PhaseId::EAP1, eap1_s}, {PhaseId::RAP1, rap1_s}, {PhaseId::MAP1, 0.0},
              {PhaseId::EAP2, 0.0},    {PhaseId::RAP2, 0.0},    {PhaseId::MAP2, 0.0},
              {PhaseId::CAP, 0.0}};
  return s;
}

SchemeConfig modified_scheme(double rap_s, int retry_limit) {
  const std::set<PhaseId> phases{PhaseId::RAP, PhaseId::CAP};
  SchemeConfig s;
  s.kind = SchemeKind::modified;
  s.access = AccessMechanism::rts_cts;
  s.priorities = {make_priority_class(0, 16, 64, retry_limit, phases),
                  make_priority_class(2, 8, 32, retry_limit, phases),
                  make_priority_class(4, 4, 16, retry_limit, phases),
                  make_priority_class(6, 2, 8, retry_limit, phases)};
  s.phases = {{PhaseId::RAP, rap_s}, {PhaseId::MAP, 0.0}, {PhaseId::CAP, 0.0}};
  return s;
}

}  // namespace wban
