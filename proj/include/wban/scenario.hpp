#pragma once

#include <map>

#include "wban/protocol.hpp"

namespace wban {

inline constexpr int kMaxBanSize = 64;

struct ChannelParams {
  double ber = 2e-5;
  std::map<int, double> arrival_rate_pkts_per_s;  ///< keyed by UP id

  bool operator==(const ChannelParams&) const = default;
};

/// A complete experiment point: superframe, PHY, timing, channel, energy and population.
struct Scenario {
  SchemeConfig scheme;
  PhyParams phy;
  TimingParams timing;
  ChannelParams channel;
  EnergyParams energy;
  std::map<int, int> node_counts;  ///< keyed by UP id

  int total_nodes() const;
  int nodes(int up_id) const;
  double arrival_rate(int up_id) const;
  double per() const { return packet_error_rate(scheme.access, phy, channel.ber); }
  TxDurations tx() const { return tx_durations(scheme.access, phy, timing); }
};

/// Default parameter set for a scheme with `total_nodes` split evenly
/// across its user priorities and 0.5 pkt/s per node.
Scenario default_scenario(SchemeKind kind, int total_nodes);

/// Even split of `total` nodes over the scheme's UPs; throws if not divisible.
std::map<int, int> split_nodes(const SchemeConfig& scheme, int total);

void set_uniform_arrival_rate(Scenario& s, double lambda);

/// Throws ValidationError naming the first invalid field.
void validate(const Scenario& s);

}  // namespace wban
