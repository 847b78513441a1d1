#include "wban/scenario.hpp"

#include <cmath>
#include <string>

#include "wban/error.hpp"

namespace wban {

int Scenario::total_nodes() const {
  int n = 0;
  for (const auto& [up, count] : node_counts) n += count;
  return n;
}

int Scenario::nodes(int up_id) const {
  const auto it = node_counts.find(up_id);
  return it == node_counts.end() ? 0 : it->second;
}

double Scenario::arrival_rate(int up_id) const {
  const auto it = channel.arrival_rate_pkts_per_s.find(up_id);
  return it == channel.arrival_rate_pkts_per_s.end() ? 0.0 : it->second;
}

std::map<int, int> split_nodes(const SchemeConfig& scheme, int total) {
  const int classes = static_cast<int>(scheme.priorities.size());
  if (total < 0) throw ValidationError("total_nodes", "must be >= 0");
  if (total > kMaxBanSize)
    throw ValidationError("total_nodes", "exceeds the BAN size limit of " + std::to_string(kMaxBanSize));
  if (classes == 0 || total % classes != 0)
    throw ValidationError("total_nodes", std::to_string(total) + " is not divisible by the " +
                                             std::to_string(classes) + " user priorities");
  std::map<int, int> counts;
  for (const auto& p : scheme.priorities) counts[p.id] = total / classes;
  return counts;
}

void set_uniform_arrival_rate(Scenario& s, double lambda) {
  s.channel.arrival_rate_pkts_per_s.clear();
  for (const auto& p : s.scheme.priorities) s.channel.arrival_rate_pkts_per_s[p.id] = lambda;
}

Scenario default_scenario(SchemeKind kind, int total_nodes) {
  Scenario s;
  s.scheme = kind == SchemeKind::standard ? standard_scheme() : modified_scheme();
  set_uniform_arrival_rate(s, 0.5);
  s.node_counts = split_nodes(s.scheme, total_nodes);
  return s;
}

void validate(const Scenario& s) {
  validate(s.scheme);
  validate(s.phy);
  validate(s.timing);
  validate(s.energy);
  if (!(s.channel.ber >= 0.0 && s.channel.ber < 1.0))
    throw ValidationError("ber", "must lie in [0, 1)");
  for (const auto& [up, lambda] : s.channel.arrival_rate_pkts_per_s) {
    if (!s.scheme.has_priority(up))
      throw ValidationError("lambda_pkts_per_s", "unknown user priority " + std::to_string(up));
    if (!(lambda >= 0.0) || std::isnan(lambda))
      throw ValidationError("lambda_pkts_per_s", "must be >= 0");
  }
  for (const auto& [up, count] : s.node_counts) {
    if (!s.scheme.has_priority(up))
      throw ValidationError("node_counts", "unknown user priority " + std::to_string(up));
    if (count < 0) throw ValidationError("node_counts", "must be >= 0");
  }
  if (s.total_nodes() > kMaxBanSize)
    throw ValidationError("total_nodes", "exceeds the BAN size limit of " + std::to_string(kMaxBanSize));
}

}  // namespace wban
