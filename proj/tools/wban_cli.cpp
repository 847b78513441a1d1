// wban: analytic solver, simulator and sweep driver for WBAN CSMA/CA schemes.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "wban/error.hpp"
#include "wban/experiments.hpp"

using namespace wban;

namespace {

enum Exit { kOk = 0, kValidation = 2, kNonConvergence = 3, kIo = 4 };

struct Globals {
  std::string format = "csv";
  bool trace = false;
};

void print_rows(const std::vector<ResultRow>& rows, const Globals& g) {
  if (g.format == "json") write_json(std::cout, rows);
  else write_csv(std::cout, rows);
}

void report(const SweepResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  for (const auto& f : r.failures) std::cerr << "failed: " << f << '\n';
}

int cmd_solve(const std::string& config, const std::string& output, const Globals& g) {
  ExperimentSpec spec = load_spec(config);
  spec.analytic = true;
  spec.simulate = false;
  const SweepResult r = run_sweep(spec);
  report(r);
  print_rows(r.rows, g);
  if (!output.empty()) write_outputs(r, output);
  for (const auto& row : r.rows)
    if (row.status == "nonconverged") return kNonConvergence;
  return kOk;
}

int cmd_simulate(const std::string& config, std::uint64_t seed, const std::string& output,
                 const Globals& g) {
  ExperimentSpec spec = load_spec(config);
  const SweepSpec sweep = spec.effective_sweep();
  std::vector<ResultRow> rows;
  for (double value : sweep.values) {
    const Scenario sc = apply_sweep_value(spec, sweep.variable, value);
    SimConfig cfg = spec.sim_config(seed);
    cfg.trace = g.trace;
    const SimResult sim = run(sc, cfg);
    const auto part = simulation_rows(sc, sim, value, seed);
    rows.insert(rows.end(), part.begin(), part.end());
    if (g.trace) {
      const std::filesystem::path dir = output.empty() ? spec.output_dir : output;
      std::error_code ec;
      std::filesystem::create_directories(dir, ec);
      char name[96];
      std::snprintf(name, sizeof name, "trace_%s_%g_seed%llu.txt",
                    std::string(to_string(sweep.variable)).c_str(), value,
                    static_cast<unsigned long long>(seed));
      std::ofstream out(dir / name);
      if (!out) throw IoError("cannot write trace to " + (dir / name).string());
      write_trace(out, sim.trace());
    }
  }
  print_rows(rows, g);
  if (!output.empty()) {
    SweepResult r;
    r.scheme = std::string(to_string(spec.scenario.scheme.kind));
    r.sweep = sweep;
    r.rows = std::move(rows);
    write_outputs(r, output);
  }
  return kOk;
}

int cmd_sweep(const std::string& config, const std::string& output, const Globals& g) {
  const ExperimentSpec spec = load_spec(config);
  const SweepResult r = run_sweep(spec);
  report(r);
  const std::filesystem::path dir = output.empty() ? spec.output_dir : output;
  write_outputs(r, dir);
  if (g.format == "json") write_json(std::cout, r.rows);
  std::cerr << r.rows.size() << " rows written to " << dir.string() << '\n';
  return kOk;
}

int cmd_compare(const std::string& standard, const std::string& modified, const std::string& output,
                const Globals& g) {
  const auto rows = compare(load_spec(standard), load_spec(modified));
  if (g.format == "json") {
    // one object per row, same fields as the CSV
    std::cout << "[\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      std::cout << "  {\"sweep_value\": \"" << format_number(r.sweep_value) << "\", \"up\": \""
                << (r.up == kAggregateRow ? std::string("agg") : std::to_string(r.up))
                << "\", \"metric\": \"" << r.metric << "\", \"standard\": \""
                << format_number(r.standard) << "\", \"modified\": \"" << format_number(r.modified)
                << "\", \"delta\": \"" << format_number(r.delta) << "\"}"
                << (i + 1 < rows.size() ? ",\n" : "\n");
    }
    std::cout << "]\n";
  } else {
    write_comparison_csv(std::cout, rows);
  }
  if (!output.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(output, ec);
    std::ofstream out(std::filesystem::path(output) / "comparison.csv", std::ios::binary);
    if (!out) throw IoError("cannot write " + output + "/comparison.csv");
    write_comparison_csv(out, rows);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WBAN CSMA/CA analytic model and simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--format", g.format, "stdout format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_flag("--trace", g.trace, "write a per-event trace (simulate)");

  std::string config, output, standard, modified;
  std::uint64_t seed = 1;

  auto* solve_cmd = app.add_subcommand("solve", "analytic solution of every sweep point");
  solve_cmd->add_option("--config", config, "experiment JSON")->required();
  solve_cmd->add_option("--output", output, "also write result files here");

  auto* sim_cmd = app.add_subcommand("simulate", "one simulation run per sweep point");
  sim_cmd->add_option("--config", config, "experiment JSON")->required();
  sim_cmd->add_option("--seed", seed, "RNG seed")->required();
  sim_cmd->add_option("--output", output, "also write result files here");

  auto* sweep_cmd = app.add_subcommand("sweep", "full sweep over modes and seeds");
  sweep_cmd->add_option("--config", config, "experiment JSON")->required();
  sweep_cmd->add_option("--output", output, "output directory (default: the spec's)");

  auto* cmp_cmd = app.add_subcommand("compare", "paired analytic metrics of two schemes");
  cmp_cmd->add_option("--standard", standard, "standard-scheme JSON")->required();
  cmp_cmd->add_option("--modified", modified, "modified-scheme JSON")->required();
  cmp_cmd->add_option("--output", output, "also write comparison.csv here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*solve_cmd) return cmd_solve(config, output, g);
    if (*sim_cmd) return cmd_simulate(config, seed, output, g);
    if (*sweep_cmd) return cmd_sweep(config, output, g);
    if (*cmp_cmd) return cmd_compare(standard, modified, output, g);
  } catch (const ValidationError& e) {
    std::cerr << "validation error (" << e.field() << "): " << e.what() << '\n';
    return kValidation;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const ConvergenceError& e) {
    // only reachable from compare, which has no per-point fallback
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}
