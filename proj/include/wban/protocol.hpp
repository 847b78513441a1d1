#pragma once

// Static protocol mathematics shared by the analytic model and the simulator:
// contention-window schedule, frame and transaction airtimes, packet error
// rate, mean backoff and counter-lock probability.

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace wban {

enum class SchemeKind { standard, modified };
enum class AccessMechanism { basic, rts_cts };

enum class PhaseId { EAP1, RAP1, MAP1, EAP2, RAP2, MAP2, CAP, RAP, MAP };

std::string_view to_string(SchemeKind k);
std::string_view to_string(AccessMechanism a);
std::string_view to_string(PhaseId p);
SchemeKind scheme_kind_from_string(std::string_view s);
AccessMechanism access_mechanism_from_string(std::string_view s);
PhaseId phase_id_from_string(std::string_view s);

/// True for phases in which CSMA/CA contention happens (EAPx, RAPx, CAP, RAP).
bool is_contention_phase(PhaseId p);

struct PriorityClass {
  int id = 0;
  int cw_min = 1;
  int cw_max = 1;
  int m = 0;  ///< last doubling stage
  int x = 0;  ///< stages held at cw_max after m
  std::set<PhaseId> permitted_phases;

  int last_stage() const { return m + x; }
  int attempts() const { return m + x + 1; }
  bool permitted_in(PhaseId p) const { return permitted_phases.count(p) != 0; }
};

struct Phase {
  PhaseId id;
  double duration_s = 0.0;
};

struct SchemeConfig {
  SchemeKind kind = SchemeKind::modified;
  std::vector<PriorityClass> priorities;
  AccessMechanism access = AccessMechanism::rts_cts;
  std::vector<Phase> phases;

  const PriorityClass& priority(int up_id) const;
  bool has_priority(int up_id) const;
  double contention_time_s() const;
  double superframe_s() const;
  double phase_duration(PhaseId id) const;
  void set_phase_duration(PhaseId id, double seconds);
};

struct PhyParams {
  double preamble_bits = 90;
  double phy_header_bits = 31;
  double mac_header_bits = 56;
  double fcs_bits = 16;
  double framebody_bits = 800;
  double rate_symbol_bps = 600e3;
  double rate_plcp_bps = 91.9e3;
  double rate_psdu_bps = 971.4e3;

  bool operator==(const PhyParams&) const = default;
};

struct TimingParams {
  double csma_slot_s = 125e-6;
  double sifs_s = 75e-6;
  double prop_delay_s = 1e-6;

  bool operator==(const TimingParams&) const = default;
};

struct EnergyParams {
  double p_tx_w = 27e-3;
  double p_rx_w = 1.8e-3;
  double p_idle_w = 5e-6;

  bool operator==(const EnergyParams&) const = default;
};

struct TxDurations {
  double t_succ_s = 0;
  double t_coll_s = 0;
  double t_error_s = 0;
  double t_data_s = 0;
  double t_ctrl_s = 0;  ///< RTS, CTS and ACK share one length
};

enum class BackoffMode { paper_closed_form, stage_average };

std::string_view to_string(BackoffMode m);
BackoffMode backoff_mode_from_string(std::string_view s);

inline constexpr int kDefaultRetryLimit = 7;

/// Backoff stage limits (m, x) for a window pair under a retry limit.
struct StageLimits {
  int m = 0;
  int x = 0;
};

StageLimits derive_stage_limits(int cw_min, int cw_max, int retry_limit);

PriorityClass make_priority_class(int id, int cw_min, int cw_max, int retry_limit,
                                  std::set<PhaseId> phases);

/// W_{i,j}: window at backoff stage j.
int contention_window(const PriorityClass& p, int stage);

/// Windows for every stage 0..m+x.
std::vector<int> window_schedule(const PriorityClass& p);

double data_frame_duration(const PhyParams& phy);
double control_frame_duration(const PhyParams& phy);

/// On-air lengths in bits, PHY overhead included.
double data_frame_bits(const PhyParams& phy);
double control_frame_bits(const PhyParams& phy);

TxDurations tx_durations(AccessMechanism access, const PhyParams& phy, const TimingParams& timing);

double packet_error_rate(AccessMechanism access, const PhyParams& phy, double ber);

/// Payload airtime, used by channel utilization.
double framebody_duration(const PhyParams& phy);

double mean_backoff(const PriorityClass& p, BackoffMode mode);

/// Probability that a CSMA slot finds the counter locked because the rest
/// of the phase cannot hold a transaction. Throws InfeasiblePhaseError when
/// L_phase - L_succ - C_i < 1.
double lock_probability(const PriorityClass& p, double phase_s, double slot_s, double t_succ_s,
                        BackoffMode mode);

void validate(const PriorityClass& p);
void validate(const SchemeConfig& s);
void validate(const PhyParams& phy);
void validate(const TimingParams& t);
void validate(const EnergyParams& e);

/// Standard superframe: 8 UPs, basic access, EAP1/RAP1/MAP1/EAP2/RAP2/MAP2/CAP.
SchemeConfig standard_scheme(double eap1_s = 0.1, double rap1_s = 0.8,
                             int retry_limit = kDefaultRetryLimit);

/// Modified superframe: UPs 0/2/4/6 with the larger windows, RTS/CTS, RAP/MAP/CAP.
SchemeConfig modified_scheme(double rap_s = 0.9, int retry_limit = kDefaultRetryLimit);

}  // namespace wban
