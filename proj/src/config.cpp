#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "wban/error.hpp"
#include "wban/experiments.hpp"

namespace wban {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ValidationError(prefix + key, "unknown field");
}

const json& require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw ValidationError(field, "expected an object");
  return j;
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ValidationError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(field, "must be finite");
  return v;
}

int get_int(const json& j, const std::string& field) {
  const double v = get_number(j, field);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ValidationError(field, "expected an integer");
  return static_cast<int>(v);
}

std::string get_string(const json& j, const std::string& field) {
  if (!j.is_string()) throw ValidationError(field, "expected a string");
  return j.get<std::string>();
}

void read_number(const json& obj, const char* key, const std::string& prefix, double& out) {
  if (obj.contains(key)) out = get_number(obj.at(key), prefix + key);
}

SweepVariable sweep_variable_from_string(const std::string& s) {
  if (s == "total_nodes") return SweepVariable::total_nodes;
  if (s == "ber") return SweepVariable::ber;
  if (s == "lambda") return SweepVariable::lambda;
  if (s == "rap_s") return SweepVariable::rap_s;
  throw ValidationError("sweep.variable", "unknown sweep variable '" + s + "'");
}

std::vector<double> parse_range(const std::string& text) {
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("sweep.values", "malformed range '" + text + "'");
    }
  }
  if (parts.size() != 3) throw ValidationError("sweep.values", "range must be start:stop:step");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0.0) || stop < start)
    throw ValidationError("sweep.values", "range needs step > 0 and stop >= start");
  std::vector<double> values;
  const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= count; ++i) values.push_back(start + static_cast<double>(i) * step);
  return values;
}

SweepSpec parse_sweep(const json& j) {
  require_object(j, "sweep");
  reject_unknown(j, {"variable", "values"}, "sweep.");
  SweepSpec s;
  if (!j.contains("variable")) throw ValidationError("sweep.variable", "missing");
  s.variable = sweep_variable_from_string(get_string(j.at("variable"), "sweep.variable"));
  if (!j.contains("values")) throw ValidationError("sweep.values", "missing");
  const json& v = j.at("values");
  if (v.is_string()) {
    s.values = parse_range(v.get<std::string>());
  } else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i)
      s.values.push_back(get_number(v[i], "sweep.values[" + std::to_string(i) + "]"));
  } else {
    throw ValidationError("sweep.values", "expected a list or 'start:stop:step'");
  }
  return s;
}

}  // namespace

std::string_view to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::total_nodes: return "total_nodes";
    case SweepVariable::ber: return "ber";
    case SweepVariable::lambda: return "lambda";
    case SweepVariable::rap_s: return "rap_s";
  }
  return "?";
}

PhaseId main_access_phase(SchemeKind kind) {
  return kind == SchemeKind::standard ? PhaseId::RAP1 : PhaseId::RAP;
}

SweepSpec ExperimentSpec::effective_sweep() const {
  if (sweep) return *sweep;
  return SweepSpec{SweepVariable::total_nodes, {static_cast<double>(scenario.total_nodes())}};
}

SimConfig ExperimentSpec::sim_config(std::uint64_t seed) const {
  SimConfig cfg;
  cfg.seed = seed;
  cfg.superframes = superframes;
  cfg.warmup_superframes = warmup_superframes;
  return cfg;
}

Scenario apply_sweep_value(const ExperimentSpec& spec, SweepVariable variable, double value) {
  Scenario s = spec.scenario;
  switch (variable) {
    case SweepVariable::total_nodes:
      if (value != std::floor(value)) throw ValidationError("sweep.values", "node counts must be integers");
      s.node_counts = split_nodes(s.scheme, static_cast<int>(value));
      break;
    case SweepVariable::ber:
      s.channel.ber = value;
      break;
    case SweepVariable::lambda:
      set_uniform_arrival_rate(s, value);
      break;
    case SweepVariable::rap_s:
      s.scheme.set_phase_duration(main_access_phase(s.scheme.kind), value);
      break;
  }
  validate(s);
  return s;
}

ExperimentSpec parse_spec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  require_object(doc, "config");
  reject_unknown(doc,
                 {"scheme", "access_mechanism", "phases", "total_nodes", "node_counts", "ber",
                  "lambda_pkts_per_s", "phy", "timing", "energy", "sweep", "modes", "seeds",
                  "warmup_superframes", "superframes", "retry_limit", "solver", "output"},
                 "");

  ExperimentSpec spec;
  if (!doc.contains("scheme")) throw ValidationError("scheme", "missing");
  const SchemeKind kind = scheme_kind_from_string(get_string(doc.at("scheme"), "scheme"));
  const int retry_limit =
      doc.contains("retry_limit") ? get_int(doc.at("retry_limit"), "retry_limit") : kDefaultRetryLimit;
  if (retry_limit < 0) throw ValidationError("retry_limit", "must be >= 0");

  Scenario& sc = spec.scenario;
  sc.scheme = kind == SchemeKind::standard ? standard_scheme(0.1, 0.8, retry_limit)
                                           : modified_scheme(0.9, retry_limit);
  if (doc.contains("access_mechanism"))
    sc.scheme.access =
        access_mechanism_from_string(get_string(doc.at("access_mechanism"), "access_mechanism"));

  if (doc.contains("phy")) {
    const json& p = require_object(doc.at("phy"), "phy");
    reject_unknown(p,
                   {"preamble_bits", "phy_header_bits", "mac_header_bits", "fcs_bits",
                    "framebody_bits", "rate_symbol_bps", "rate_plcp_bps", "rate_psdu_bps"},
                   "phy.");
    read_number(p, "preamble_bits", "phy.", sc.phy.preamble_bits);
    read_number(p, "phy_header_bits", "phy.", sc.phy.phy_header_bits);
    read_number(p, "mac_header_bits", "phy.", sc.phy.mac_header_bits);
    read_number(p, "fcs_bits", "phy.", sc.phy.fcs_bits);
    read_number(p, "framebody_bits", "phy.", sc.phy.framebody_bits);
    read_number(p, "rate_symbol_bps", "phy.", sc.phy.rate_symbol_bps);
    read_number(p, "rate_plcp_bps", "phy.", sc.phy.rate_plcp_bps);
    read_number(p, "rate_psdu_bps", "phy.", sc.phy.rate_psdu_bps);
  }
  if (doc.contains("timing")) {
    const json& t = require_object(doc.at("timing"), "timing");
    reject_unknown(t, {"csma_slot_s", "sifs_s", "prop_delay_s", "rap_s"}, "timing.");
    read_number(t, "csma_slot_s", "timing.", sc.timing.csma_slot_s);
    read_number(t, "sifs_s", "timing.", sc.timing.sifs_s);
    read_number(t, "prop_delay_s", "timing.", sc.timing.prop_delay_s);
    if (t.contains("rap_s"))
      sc.scheme.set_phase_duration(main_access_phase(kind), get_number(t.at("rap_s"), "timing.rap_s"));
  }
  if (doc.contains("phases")) {
    const json& ph = require_object(doc.at("phases"), "phases");
    for (const auto& [name, value] : ph.items())
      sc.scheme.set_phase_duration(phase_id_from_string(name), get_number(value, "phases." + name));
  }
  if (doc.contains("energy")) {
    const json& e = require_object(doc.at("energy"), "energy");
    reject_unknown(e, {"p_tx_w", "p_rx_w", "p_idle_w"}, "energy.");
    read_number(e, "p_tx_w", "energy.", sc.energy.p_tx_w);
    read_number(e, "p_rx_w", "energy.", sc.energy.p_rx_w);
    read_number(e, "p_idle_w", "energy.", sc.energy.p_idle_w);
  }
  read_number(doc, "ber", "", sc.channel.ber);

  set_uniform_arrival_rate(sc, 0.5);
  if (doc.contains("lambda_pkts_per_s")) {
    const json& l = doc.at("lambda_pkts_per_s");
    if (l.is_object()) {
      for (const auto& [key, value] : l.items()) {
        int up = -1;
        try {
          up = std::stoi(key);
        } catch (const std::exception&) {
        }
        if (!sc.scheme.has_priority(up))
          throw ValidationError("lambda_pkts_per_s." + key, "unknown user priority");
        sc.channel.arrival_rate_pkts_per_s[up] = get_number(value, "lambda_pkts_per_s." + key);
      }
    } else {
      set_uniform_arrival_rate(sc, get_number(l, "lambda_pkts_per_s"));
    }
  }

  if (doc.contains("node_counts")) {
    if (doc.contains("total_nodes"))
      throw ValidationError("node_counts", "give either total_nodes or node_counts, not both");
    const json& nc = require_object(doc.at("node_counts"), "node_counts");
    for (const auto& [key, value] : nc.items()) {
      int up = -1;
      try {
        up = std::stoi(key);
      } catch (const std::exception&) {
      }
      if (!sc.scheme.has_priority(up)) throw ValidationError("node_counts." + key, "unknown user priority");
      sc.node_counts[up] = get_int(value, "node_counts." + key);
    }
  } else {
    const int total = doc.contains("total_nodes") ? get_int(doc.at("total_nodes"), "total_nodes") : 0;
    if (!doc.contains("total_nodes") && !doc.contains("sweep"))
      throw ValidationError("total_nodes", "missing (and no sweep given)");
    sc.node_counts = split_nodes(sc.scheme, total);
  }

  if (doc.contains("sweep")) spec.sweep = parse_sweep(doc.at("sweep"));

  if (doc.contains("modes")) {
    const json& m = doc.at("modes");
    if (!m.is_array() || m.empty()) throw ValidationError("modes", "expected a non-empty list");
    spec.analytic = spec.simulate = false;
    for (const auto& item : m) {
      const std::string mode = get_string(item, "modes");
      if (mode == "analytic") spec.analytic = true;
      else if (mode == "simulate") spec.simulate = true;
      else throw ValidationError("modes", "unknown mode '" + mode + "'");
    }
  }
  if (doc.contains("seeds")) {
    const json& s = doc.at("seeds");
    if (!s.is_array() || s.empty()) throw ValidationError("seeds", "expected a non-empty list");
    spec.seeds.clear();
    for (const auto& item : s) {
      const int seed = get_int(item, "seeds");
      if (seed < 0) throw ValidationError("seeds", "must be >= 0");
      spec.seeds.push_back(static_cast<std::uint64_t>(seed));
    }
  }
  if (doc.contains("superframes")) spec.superframes = get_int(doc.at("superframes"), "superframes");
  if (doc.contains("warmup_superframes"))
    spec.warmup_superframes = get_int(doc.at("warmup_superframes"), "warmup_superframes");
  if (doc.contains("output")) spec.output_dir = get_string(doc.at("output"), "output");

  if (doc.contains("solver")) {
    const json& s = require_object(doc.at("solver"), "solver");
    reject_unknown(s, {"damping", "tolerance", "max_iterations", "backoff_mode"}, "solver.");
    read_number(s, "damping", "solver.", spec.solver.damping);
    read_number(s, "tolerance", "solver.", spec.solver.tolerance);
    if (s.contains("max_iterations"))
      spec.solver.max_iterations = get_int(s.at("max_iterations"), "solver.max_iterations");
    if (s.contains("backoff_mode"))
      spec.solver.backoff_mode =
          backoff_mode_from_string(get_string(s.at("backoff_mode"), "solver.backoff_mode"));
  }

  validate(spec.solver);
  validate(spec.sim_config(spec.seeds.front()));
  if (spec.sweep) {
    if (spec.sweep->values.empty()) throw ValidationError("sweep.values", "empty sweep");
    for (double v : spec.sweep->values) apply_sweep_value(spec, spec.sweep->variable, v);
  } else {
    validate(sc);
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_spec(buffer.str());
}

}  // namespace wban
