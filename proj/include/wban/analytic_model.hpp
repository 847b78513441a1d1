#pragma once

// Markov-chain model of the per-UP backoff procedure, the coupled
// per-UP / global probability system, and its damped fixed-point solver.

#include <span>
#include <string>
#include <vector>

#include "wban/protocol.hpp"
#include "wban/scenario.hpp"

namespace wban {

/// One user priority taking part in a contention phase.
struct ClassInput {
  PriorityClass cls;
  int nodes = 0;
  double lambda = 0.0;
  double p_lock = 0.0;
};

/// A single contention phase with the classes permitted to contend in it.
struct ContentionProblem {
  PhaseId phase = PhaseId::RAP;
  double phase_s = 0.0;
  std::vector<ClassInput> classes;
  TxDurations tx;
  double per = 0.0;
  double slot_s = 125e-6;
};

struct ClassCoupling {
  double p_idle_i = 0;
  double p_acce = 0;
  double p_acce_raw = 0;  ///< before clamping into [0, 1]
  double p_succ = 0;
  double p_coll = 0;
  double p_error = 0;
  double p_fail = 0;
};

struct CouplingResult {
  double p_idle = 1;
  double p_tran = 0;
  std::vector<ClassCoupling> classes;
  double total_succ = 0;
  double total_coll = 0;
  double total_error = 0;
};

/// Global and per-class probabilities given the attempt probabilities.
/// `taus[i]` belongs to `classes[i]`.
CouplingResult coupling_update(std::span<const double> taus, std::span<const ClassInput> classes,
                               double per);

double expected_state_time(double p_tran, double total_succ, double total_coll, double total_error,
                           const TxDurations& tx, double slot_s);

double queue_occupancy(double lambda, double t_e_s);

/// Stationary probability of state (i, 0, 0) from the normalization condition.
double chain_b000(const PriorityClass& p, double p_fail, double p_idle_i, double rho);

double tau_from_chain(const PriorityClass& p, double p_fail, double b000);

/// Sum over j of p_fail^j for j = 0..m+x (expected attempts per frame).
double attempt_series(const PriorityClass& p, double p_fail);

struct InitialGuess {
  enum class Kind { window_based, uniform };
  Kind kind = Kind::window_based;
  double tau = 0.1;  ///< cap for window_based, value for uniform
  double rho = 0.5;

  static InitialGuess window(double cap = 0.1) { return {Kind::window_based, cap, 0.5}; }
  static InitialGuess uniform(double tau) { return {Kind::uniform, tau, 0.5}; }
};

struct SolverOptions {
  double damping = 0.5;
  double tolerance = 1e-10;
  int max_iterations = 20000;
  InitialGuess initial;
  BackoffMode backoff_mode = BackoffMode::paper_closed_form;
};

void validate(const SolverOptions& o);

struct ClassSolution {
  int up = 0;
  int nodes = 0;
  // unknowns
  double p_idle_i = 0;
  double p_acce = 0;
  double p_fail = 0;
  double tau = 0;
  double rho = 0;
  // intermediates
  double b000 = 0;
  double p_coll = 0;
  double p_error = 0;
  double p_succ = 0;
  double p_drop = 0;
  double p_lock = 0;
};

struct SolutionReport {
  PhaseId phase = PhaseId::RAP;
  double phase_s = 0;
  double p_idle = 1;
  std::vector<ClassSolution> classes;
  double p_tran = 0;
  double t_e_s = 0;
  double per = 0;
  double total_succ = 0;
  double total_coll = 0;
  double total_error = 0;
  TxDurations tx;
  int iterations = 0;
  double residual = 0;

  const ClassSolution* find(int up) const;
};

SolutionReport solve(const ContentionProblem& problem, const SolverOptions& options = {});

/// A scheme is solved phase by phase; weight is the phase's share of the
/// superframe's contention time.
struct PhaseSolution {
  double weight = 0;
  SolutionReport report;
};

struct SchemeSolution {
  std::vector<PhaseSolution> phases;
  std::vector<std::string> warnings;
  int iterations() const;
  double residual() const;
};

/// One problem per contention phase of positive length. UPs with no nodes
/// are skipped; UPs with zero arrival rate are skipped with a warning.
std::vector<ContentionProblem> build_problems(const Scenario& scenario, BackoffMode mode,
                                              std::vector<std::string>* warnings = nullptr);

SchemeSolution solve(const Scenario& scenario, const SolverOptions& options = {});

/// Full stationary distribution of one class's chain.
struct ChainDistribution {
  std::vector<std::vector<double>> stages;  ///< stages[j][k], k = 0..W_j
  double empty = 0;
  double total() const;
};

ChainDistribution reconstruct_chain(const PriorityClass& p, const ClassSolution& s);

}  // namespace wban
