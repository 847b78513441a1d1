#include "wban/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "wban/error.hpp"

namespace wban {

namespace {

/// Runs `count` independent jobs on the available cores. Each job writes only
/// its own slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(count, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  for (auto& t : pool) t.join();
}

ResultRow aggregate_row(const std::string& scheme, const std::string& mode, double sweep_value,
                        const MetricsReport& m) {
  ResultRow row;
  row.scheme = scheme;
  row.mode = mode;
  row.sweep_value = sweep_value;
  row.up = kAggregateRow;
  row.metrics.throughput_bps = m.aggregate_throughput_bps;
  row.metrics.utilization = m.utilization;
  row.jain = m.jain;
  row.aggregate_throughput_bps = m.aggregate_throughput_bps;
  return row;
}

std::vector<int> present_ups(const Scenario& s) {
  std::vector<int> ups;
  for (const auto& p : s.scheme.priorities)
    if (s.nodes(p.id) > 0) ups.push_back(p.id);
  return ups;
}

std::vector<ResultRow> failed_rows(const Scenario& s, const std::string& mode, double sweep_value,
                                   const std::string& status) {
  std::vector<ResultRow> rows;
  for (int up : present_ups(s)) {
    ResultRow r;
    r.scheme = std::string(to_string(s.scheme.kind));
    r.mode = mode;
    r.sweep_value = sweep_value;
    r.up = up;
    r.metrics.up = up;
    r.status = status;
    rows.push_back(r);
  }
  ResultRow agg;
  agg.scheme = std::string(to_string(s.scheme.kind));
  agg.mode = mode;
  agg.sweep_value = sweep_value;
  agg.status = status;
  rows.push_back(agg);
  return rows;
}

std::string csv_field(std::optional<double> v) { return format_number(v); }

std::string up_label(int up) { return up == kAggregateRow ? "agg" : std::to_string(up); }

}  // namespace

std::string format_number(std::optional<double> v) {
  if (!v || !std::isfinite(*v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8e", *v);
  return buf;
}

std::vector<ResultRow> analytic_rows(const Scenario& scenario, const SchemeSolution& solution,
                                     double sweep_value) {
  const MetricsReport m = analytic_metrics(solution, scenario);
  const std::string scheme(to_string(scenario.scheme.kind));
  std::vector<ResultRow> rows;
  for (const auto& up : m.per_up) {
    ResultRow r;
    r.scheme = scheme;
    r.mode = "analytic";
    r.sweep_value = sweep_value;
    r.up = up.up;
    r.metrics = up;
    r.iterations = solution.iterations();
    r.residual = solution.residual();
    rows.push_back(r);
  }
  ResultRow agg = aggregate_row(scheme, "analytic", sweep_value, m);
  agg.iterations = solution.iterations();
  agg.residual = solution.residual();
  rows.push_back(agg);
  return rows;
}

std::vector<ResultRow> simulation_rows(const Scenario& scenario, const SimResult& result,
                                       double sweep_value, std::uint64_t seed) {
  const std::string scheme(to_string(scenario.scheme.kind));
  std::vector<ResultRow> rows;
  for (const auto& up : result.metrics.per_up) {
    ResultRow r;
    r.scheme = scheme;
    r.mode = "simulate";
    r.sweep_value = sweep_value;
    r.up = up.up;
    r.metrics = up;
    r.seed = seed;
    rows.push_back(r);
  }
  ResultRow agg = aggregate_row(scheme, "simulate", sweep_value, result.metrics);
  agg.seed = seed;
  rows.push_back(agg);
  return rows;
}

SweepResult run_sweep(const ExperimentSpec& spec) {
  SweepResult out;
  out.scheme = std::string(to_string(spec.scenario.scheme.kind));
  out.sweep = spec.effective_sweep();
  if (out.sweep.values.empty()) throw ValidationError("sweep.values", "empty sweep");

  struct Job {
    std::size_t point;
    bool analytic;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t p = 0; p < out.sweep.values.size(); ++p) {
    if (spec.analytic) jobs.push_back({p, true, 0});
    if (spec.simulate)
      for (auto seed : spec.seeds) jobs.push_back({p, false, seed});
  }

  struct JobResult {
    std::vector<ResultRow> rows;
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
  };
  std::vector<JobResult> results(jobs.size());

  parallel_for(jobs.size(), [&](std::size_t i) {
    const Job& job = jobs[i];
    const double value = out.sweep.values[job.point];
    const Scenario sc = apply_sweep_value(spec, out.sweep.variable, value);
    JobResult& r = results[i];
    char label[64];
    std::snprintf(label, sizeof label, "%s=%g", std::string(to_string(out.sweep.variable)).c_str(), value);
    if (job.analytic) {
      try {
        const SchemeSolution sol = solve(sc, spec.solver);
        r.rows = analytic_rows(sc, sol, value);
        for (const auto& w : sol.warnings) r.warnings.push_back(std::string(label) + ": " + w);
      } catch (const ConvergenceError& e) {
        r.rows = failed_rows(sc, "analytic", value, "nonconverged");
        for (auto& row : r.rows) {
          row.iterations = e.iterations();
          row.residual = e.residual();
        }
        r.failures.push_back(std::string(label) + ": " + e.what());
      } catch (const InfeasiblePhaseError& e) {
        r.rows = failed_rows(sc, "analytic", value, "infeasible");
        r.failures.push_back(std::string(label) + ": " + e.what());
      } catch (const DegenerateInputError& e) {
        r.rows = failed_rows(sc, "analytic", value, "degenerate");
        r.failures.push_back(std::string(label) + ": " + e.what());
      }
    } else {
      const SimResult sim = run(sc, spec.sim_config(job.seed));
      r.rows = simulation_rows(sc, sim, value, job.seed);
    }
  });

  for (auto& r : results) {
    out.rows.insert(out.rows.end(), r.rows.begin(), r.rows.end());
    out.failures.insert(out.failures.end(), r.failures.begin(), r.failures.end());
    out.warnings.insert(out.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  return out;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << "scheme,mode,sweep_value,up,reliability,throughput_bps,delay_s,energy_per_state_j,"
        "avg_power_w,utilization,jain,aggregate_throughput_bps,solver_iterations,solver_residual,"
        "seed,status\n";
  for (const auto& r : rows) {
    os << r.scheme << ',' << r.mode << ',' << format_number(r.sweep_value) << ',' << up_label(r.up)
       << ',' << csv_field(r.metrics.reliability) << ',' << csv_field(r.metrics.throughput_bps) << ','
       << csv_field(r.metrics.delay_s) << ',' << csv_field(r.metrics.energy_per_state_j) << ','
       << csv_field(r.metrics.avg_power_w) << ',' << csv_field(r.metrics.utilization) << ','
       << csv_field(r.jain) << ',' << csv_field(r.aggregate_throughput_bps) << ','
       << (r.iterations ? std::to_string(*r.iterations) : "NA") << ',' << csv_field(r.residual) << ','
       << (r.seed ? std::to_string(*r.seed) : "NA") << ',' << r.status << '\n';
  }
}

void write_json(std::ostream& os, const std::vector<ResultRow>& rows) {
  auto value = [](std::optional<double> v) -> nlohmann::json {
    if (!v || !std::isfinite(*v)) return "NA";
    return *v;
  };
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j;
    j["scheme"] = r.scheme;
    j["mode"] = r.mode;
    j["sweep_value"] = r.sweep_value;
    j["up"] = up_label(r.up);
    j["reliability"] = value(r.metrics.reliability);
    j["throughput_bps"] = value(r.metrics.throughput_bps);
    j["delay_s"] = value(r.metrics.delay_s);
    j["energy_per_state_j"] = value(r.metrics.energy_per_state_j);
    j["avg_power_w"] = value(r.metrics.avg_power_w);
    j["utilization"] = value(r.metrics.utilization);
    j["jain"] = value(r.jain);
    j["aggregate_throughput_bps"] = value(r.aggregate_throughput_bps);
    j["solver_iterations"] = r.iterations ? nlohmann::json(*r.iterations) : nlohmann::json("NA");
    j["solver_residual"] = value(r.residual);
    j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json("NA");
    j["status"] = r.status;
    arr.push_back(std::move(j));
  }
  os << arr.dump(2) << '\n';
}

namespace {

using MetricGetter = std::optional<double> (*)(const ResultRow&);

struct DatMetric {
  const char* name;
  MetricGetter get;
};

constexpr DatMetric kDatMetrics[] = {
    {"reliability", [](const ResultRow& r) { return r.metrics.reliability; }},
    {"throughput_bps", [](const ResultRow& r) { return r.metrics.throughput_bps; }},
    {"delay_s", [](const ResultRow& r) { return r.metrics.delay_s; }},
    {"energy_per_state_j", [](const ResultRow& r) { return r.metrics.energy_per_state_j; }},
    {"avg_power_w", [](const ResultRow& r) { return r.metrics.avg_power_w; }},
    {"utilization", [](const ResultRow& r) { return r.metrics.utilization; }},
};

/// Mean over seeds (or the single analytic value); absent if any sample is absent.
std::optional<double> mean_of(const std::vector<std::optional<double>>& samples) {
  if (samples.empty()) return std::nullopt;
  double sum = 0.0;
  for (const auto& s : samples) {
    if (!s) return std::nullopt;
    sum += *s;
  }
  return sum / static_cast<double>(samples.size());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_outputs(const SweepResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

  std::ostringstream csv;
  write_csv(csv, result.rows);
  write_file(dir / "results.csv", csv.str());

  std::vector<int> ups;
  for (const auto& r : result.rows)
    if (r.up != kAggregateRow && std::find(ups.begin(), ups.end(), r.up) == ups.end())
      ups.push_back(r.up);
  std::sort(ups.begin(), ups.end());

  for (const std::string mode : {"analytic", "simulate"}) {
    // sweep index -> up -> samples
    std::map<std::size_t, std::map<int, std::vector<const ResultRow*>>> grouped;
    for (const auto& r : result.rows) {
      if (r.mode != mode) continue;
      const auto it = std::find(result.sweep.values.begin(), result.sweep.values.end(), r.sweep_value);
      grouped[static_cast<std::size_t>(it - result.sweep.values.begin())][r.up].push_back(&r);
    }
    if (grouped.empty()) continue;
    const std::string stem = result.scheme + "_" + mode + "_";

    for (const auto& metric : kDatMetrics) {
      std::ostringstream dat;
      dat << "# " << to_string(result.sweep.variable);
      for (int up : ups) dat << " UP" << up;
      dat << '\n';
      for (const auto& [point, by_up] : grouped) {
        dat << format_number(result.sweep.values[point]);
        for (int up : ups) {
          std::vector<std::optional<double>> samples;
          if (auto it = by_up.find(up); it != by_up.end())
            for (const ResultRow* r : it->second) samples.push_back(metric.get(*r));
          dat << ' ' << format_number(mean_of(samples));
        }
        dat << '\n';
      }
      write_file(dir / (stem + metric.name + ".dat"), dat.str());
    }

    std::ostringstream agg;
    agg << "# " << to_string(result.sweep.variable) << " aggregate_throughput_bps utilization jain\n";
    for (const auto& [point, by_up] : grouped) {
      std::vector<std::optional<double>> s, u, f;
      if (auto it = by_up.find(kAggregateRow); it != by_up.end()) {
        for (const ResultRow* r : it->second) {
          s.push_back(r->aggregate_throughput_bps);
          u.push_back(r->metrics.utilization);
          f.push_back(r->jain);
        }
      }
      agg << format_number(result.sweep.values[point]) << ' ' << format_number(mean_of(s)) << ' '
          << format_number(mean_of(u)) << ' ' << format_number(mean_of(f)) << '\n';
    }
    write_file(dir / (stem + "aggregate.dat"), agg.str());
  }

  nlohmann::json summary;
  summary["scheme"] = result.scheme;
  summary["sweep_variable"] = std::string(to_string(result.sweep.variable));
  summary["sweep_values"] = result.sweep.values;
  summary["rows"] = result.rows.size();
  summary["failures"] = result.failures;
  summary["warnings"] = result.warnings;
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& r : result.rows) {
    if (r.up != kAggregateRow) continue;
    nlohmann::json d;
    d["sweep_value"] = r.sweep_value;
    d["mode"] = r.mode;
    d["status"] = r.status;
    if (r.iterations) d["solver_iterations"] = *r.iterations;
    if (r.residual) d["solver_residual"] = format_number(r.residual);
    if (r.seed) d["seed"] = *r.seed;
    diag.push_back(std::move(d));
  }
  summary["points"] = std::move(diag);
  write_file(dir / "summary.json", summary.dump(2) + "\n");
}

namespace {

void require_same(bool same, const std::string& what) {
  if (!same) throw ValidationError("compare", "standard and modified specs differ in " + what);
}

}  // namespace

std::vector<ComparisonRow> compare(const ExperimentSpec& standard, const ExperimentSpec& modified) {
  const Scenario& a = standard.scenario;
  const Scenario& b = modified.scenario;
  require_same(a.phy == b.phy, "phy");
  require_same(a.timing == b.timing, "timing");
  require_same(a.energy == b.energy, "energy");
  require_same(a.channel.ber == b.channel.ber, "ber");
  for (const auto& p : a.scheme.priorities)
    if (b.scheme.has_priority(p.id))
      require_same(a.arrival_rate(p.id) == b.arrival_rate(p.id), "lambda_pkts_per_s");
  require_same(std::abs(a.scheme.contention_time_s() - b.scheme.contention_time_s()) < 1e-12,
               "total contention time");

  const SweepSpec sa = standard.effective_sweep();
  const SweepSpec sb = modified.effective_sweep();
  if (sa.values.empty() || sb.values.empty()) throw ValidationError("sweep.values", "empty sweep");
  require_same(sa.variable == sb.variable && sa.values == sb.values, "sweep");

  std::vector<ComparisonRow> rows;
  for (double value : sa.values) {
    const Scenario sc_a = apply_sweep_value(standard, sa.variable, value);
    const Scenario sc_b = apply_sweep_value(modified, sb.variable, value);
    const MetricsReport ma = analytic_metrics(solve(sc_a, standard.solver), sc_a);
    const MetricsReport mb = analytic_metrics(solve(sc_b, modified.solver), sc_b);

    auto emit = [&](int up, const char* metric, std::optional<double> x, std::optional<double> y) {
      ComparisonRow r{value, up, metric, x, y, std::nullopt};
      if (x && y) r.delta = *y - *x;
      rows.push_back(r);
    };
    emit(kAggregateRow, "aggregate_throughput_bps", ma.aggregate_throughput_bps, mb.aggregate_throughput_bps);
    emit(kAggregateRow, "utilization", ma.utilization, mb.utilization);
    emit(kAggregateRow, "jain", ma.jain, mb.jain);
    for (const auto& ua : ma.per_up) {
      const UpMetrics* ub = mb.find(ua.up);
      if (!ub) continue;
      emit(ua.up, "reliability", ua.reliability, ub->reliability);
      emit(ua.up, "throughput_bps", ua.throughput_bps, ub->throughput_bps);
      emit(ua.up, "delay_s", ua.delay_s, ub->delay_s);
      emit(ua.up, "energy_per_state_j", ua.energy_per_state_j, ub->energy_per_state_j);
      emit(ua.up, "avg_power_w", ua.avg_power_w, ub->avg_power_w);
    }
  }
  return rows;
}

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "sweep_value,up,metric,standard,modified,delta\n";
  for (const auto& r : rows)
    os << format_number(r.sweep_value) << ',' << up_label(r.up) << ',' << r.metric << ','
       << format_number(r.standard) << ',' << format_number(r.modified) << ','
       << format_number(r.delta) << '\n';
}

}  // namespace wban
