#include "wban/analytic_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "wban/error.hpp"

namespace wban {

double attempt_series(const PriorityClass& p, double p_fail) {
  // Summed directly so that p_fail = 1 needs no special case.
  double sum = 0.0;
  double term = 1.0;
  for (int j = 0; j <= p.last_stage(); ++j) {
    sum += term;
    term *= p_fail;
  }
  return sum;
}

CouplingResult coupling_update(std::span<const double> taus, std::span<const ClassInput> classes,
                               double per) {
  if (taus.size() != classes.size()) throw ContractViolation("one tau per class required");
  CouplingResult r;
  double log_idle = 0.0;
  int total_nodes = 0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] >= 0.0 && taus[i] < 1.0)) throw ContractViolation("tau must lie in [0, 1)");
    log_idle += classes[i].nodes * std::log1p(-taus[i]);
    total_nodes += classes[i].nodes;
  }
  r.p_idle = std::exp(log_idle);
  r.p_tran = -std::expm1(log_idle);

  r.classes.resize(taus.size());
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double tau = taus[i];
    const auto& in = classes[i];
    auto& c = r.classes[i];
    c.p_idle_i = r.p_idle / (1.0 - tau) * (1.0 - in.p_lock);
    if (r.p_tran > 0.0) {
      c.p_acce_raw = in.nodes * tau * r.p_idle / ((1.0 - tau) * r.p_tran);
    } else {
      // All attempt probabilities are zero: take the equal-rate limit.
      c.p_acce_raw = total_nodes > 0 ? static_cast<double>(in.nodes) / total_nodes : 0.0;
    }
    c.p_acce = std::clamp(c.p_acce_raw, 0.0, 1.0);
    c.p_succ = c.p_acce * (1.0 - per);
    c.p_coll = 1.0 - c.p_acce;
    c.p_error = c.p_acce * per;
    c.p_fail = c.p_coll + c.p_error;
    r.total_succ += c.p_succ;
    r.total_coll += c.p_coll;
    r.total_error += c.p_error;
  }
  return r;
}

double expected_state_time(double p_tran, double total_succ, double total_coll, double total_error,
                           const TxDurations& tx, double slot_s) {
  return slot_s * (1.0 - p_tran) + tx.t_succ_s * p_tran * total_succ +
         tx.t_coll_s * p_tran * total_coll + tx.t_error_s * p_tran * total_error;
}

double queue_occupancy(double lambda, double t_e_s) {
  if (!(lambda >= 0.0)) throw ContractViolation("arrival rate must be >= 0");
  if (!(t_e_s > 0.0)) throw ContractViolation("state time must be > 0");
  if (std::isinf(lambda)) return 1.0;
  return -std::expm1(-lambda * t_e_s);
}

double chain_b000(const PriorityClass& p, double p_fail, double p_idle_i, double rho) {
  if (!(p_fail >= 0.0 && p_fail <= 1.0)) throw ContractViolation("p_fail must lie in [0, 1]");
  if (!(rho > 0.0)) throw DegenerateInputError("rho = 0: UP" + std::to_string(p.id) + " never holds a frame");
  if (rho > 1.0) throw ContractViolation("rho must lie in (0, 1]");
  if (!(p_idle_i > 0.0))
    throw DegenerateInputError("P_idle for UP" + std::to_string(p.id) + " is zero");

  double backoff = 0.0;
  double pj = 1.0;
  for (int j = 0; j <= p.last_stage(); ++j) {
    backoff += (contention_window(p, j) + 1) / 2.0 * pj;
    pj *= p_fail;
  }
  const double denom = attempt_series(p, p_fail) + backoff / p_idle_i + (1.0 - rho) / rho;
  return 1.0 / denom;
}

double tau_from_chain(const PriorityClass& p, double p_fail, double b000) {
  return b000 * attempt_series(p, p_fail);
}

void validate(const SolverOptions& o) {
  if (!(o.damping > 0.0 && o.damping <= 1.0)) throw ValidationError("solver.damping", "must lie in (0, 1]");
  if (!(o.tolerance > 0.0)) throw ValidationError("solver.tolerance", "must be > 0");
  if (o.max_iterations < 1) throw ValidationError("solver.max_iterations", "must be >= 1");
  if (!(o.initial.tau >= 0.0 && o.initial.tau < 1.0))
    throw ValidationError("solver.initial_tau", "must lie in [0, 1)");
  if (!(o.initial.rho > 0.0 && o.initial.rho <= 1.0))
    throw ValidationError("solver.initial_rho", "must lie in (0, 1]");
}

const ClassSolution* SolutionReport::find(int up) const {
  for (const auto& c : classes)
    if (c.up == up) return &c;
  return nullptr;
}

namespace {

constexpr double kClampSlack = 1e-9;
constexpr int kOscillationWindow = 50;

std::vector<double> initial_taus(const ContentionProblem& problem, const InitialGuess& guess) {
  std::vector<double> taus;
  for (const auto& c : problem.classes) {
    if (guess.kind == InitialGuess::Kind::uniform)
      taus.push_back(guess.tau);
    else
      taus.push_back(std::min(2.0 / (c.cls.cw_min + 1.0), guess.tau));
  }
  return taus;
}

}  // namespace

SolutionReport solve(const ContentionProblem& problem, const SolverOptions& options) {
  validate(options);
  SolutionReport report;
  report.phase = problem.phase;
  report.phase_s = problem.phase_s;
  report.per = problem.per;
  report.tx = problem.tx;

  const std::size_t n = problem.classes.size();
  std::vector<double> tau = initial_taus(problem, options.initial);
  std::vector<double> rho(n, options.initial.rho);
  std::vector<double> next_tau(n), next_rho(n);

  double theta = options.damping;
  double residual = 0.0;
  double previous = INFINITY;
  int rising = 0;
  int iterations = 0;
  bool converged = n == 0;

  while (!converged && iterations < options.max_iterations) {
    ++iterations;
    const CouplingResult cu = coupling_update(tau, problem.classes, problem.per);
    const double t_e = expected_state_time(cu.p_tran, cu.total_succ, cu.total_coll,
                                           cu.total_error, problem.tx, problem.slot_s);
    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& cls = problem.classes[i].cls;
      next_rho[i] = queue_occupancy(problem.classes[i].lambda, t_e);
      const double b000 = chain_b000(cls, cu.classes[i].p_fail, cu.classes[i].p_idle_i, next_rho[i]);
      next_tau[i] = tau_from_chain(cls, cu.classes[i].p_fail, b000);
      residual = std::max({residual, std::abs(next_tau[i] - tau[i]), std::abs(next_rho[i] - rho[i])});
    }
    if (residual <= options.tolerance) {
      converged = true;
      break;
    }
    rising = residual > previous ? rising + 1 : 0;
    if (rising >= kOscillationWindow) {
      theta *= 0.5;
      rising = 0;
    }
    previous = residual;
    for (std::size_t i = 0; i < n; ++i) {
      tau[i] = (1.0 - theta) * tau[i] + theta * next_tau[i];
      rho[i] = (1.0 - theta) * rho[i] + theta * next_rho[i];
    }
  }
  if (!converged)
    throw ConvergenceError("fixed point did not converge in phase " +
                               std::string(to_string(problem.phase)) + " (residual " +
                               std::to_string(residual) + ")",
                           iterations, residual);

  report.iterations = iterations;
  report.residual = residual;

  const CouplingResult cu = coupling_update(tau, problem.classes, problem.per);
  report.p_idle = cu.p_idle;
  report.p_tran = cu.p_tran;
  report.total_succ = cu.total_succ;
  report.total_coll = cu.total_coll;
  report.total_error = cu.total_error;
  report.t_e_s = expected_state_time(cu.p_tran, cu.total_succ, cu.total_coll, cu.total_error,
                                     problem.tx, problem.slot_s);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& in = problem.classes[i];
    const auto& c = cu.classes[i];
    if (c.p_acce_raw < -kClampSlack || c.p_acce_raw > 1.0 + kClampSlack)
      throw ConvergenceError("solution rests on a clamped access probability for UP" +
                                 std::to_string(in.cls.id),
                             iterations, residual);
    ClassSolution s;
    s.up = in.cls.id;
    s.nodes = in.nodes;
    s.p_idle_i = c.p_idle_i;
    s.p_acce = c.p_acce;
    s.p_fail = c.p_fail;
    s.tau = tau[i];
    s.rho = rho[i];
    s.b000 = chain_b000(in.cls, c.p_fail, c.p_idle_i, rho[i]);
    s.p_coll = c.p_coll;
    s.p_error = c.p_error;
    s.p_succ = c.p_succ;
    s.p_drop = std::pow(c.p_fail, in.cls.attempts());
    s.p_lock = in.p_lock;
    report.classes.push_back(s);
  }
  if (n == 0) report.t_e_s = problem.slot_s;
  return report;
}

int SchemeSolution::iterations() const {
  int total = 0;
  for (const auto& p : phases) total += p.report.iterations;
  return total;
}

double SchemeSolution::residual() const {
  double r = 0.0;
  for (const auto& p : phases) r = std::max(r, p.report.residual);
  return r;
}

std::vector<ContentionProblem> build_problems(const Scenario& scenario, BackoffMode mode,
                                              std::vector<std::string>* warnings) {
  const TxDurations tx = scenario.tx();
  const double per = scenario.per();
  std::set<int> warned;
  std::vector<ContentionProblem> problems;
  for (const auto& phase : scenario.scheme.phases) {
    if (!is_contention_phase(phase.id) || phase.duration_s <= 0.0) continue;
    ContentionProblem prob;
    prob.phase = phase.id;
    prob.phase_s = phase.duration_s;
    prob.tx = tx;
    prob.per = per;
    prob.slot_s = scenario.timing.csma_slot_s;
    for (const auto& cls : scenario.scheme.priorities) {
      if (!cls.permitted_in(phase.id)) continue;
      const int nodes = scenario.nodes(cls.id);
      if (nodes == 0) continue;
      const double lambda = scenario.arrival_rate(cls.id);
      if (lambda <= 0.0) {
        if (warnings && warned.insert(cls.id).second)
          warnings->push_back("UP" + std::to_string(cls.id) +
                              " has zero arrival rate and is treated as absent");
        continue;
      }
      ClassInput in;
      in.cls = cls;
      in.nodes = nodes;
      in.lambda = lambda;
      in.p_lock = lock_probability(cls, phase.duration_s, prob.slot_s, tx.t_succ_s, mode);
      prob.classes.push_back(std::move(in));
    }
    problems.push_back(std::move(prob));
  }
  return problems;
}

SchemeSolution solve(const Scenario& scenario, const SolverOptions& options) {
  validate(scenario);
  SchemeSolution sol;
  const double contention = scenario.scheme.contention_time_s();
  for (const auto& prob : build_problems(scenario, options.backoff_mode, &sol.warnings)) {
    PhaseSolution ps;
    ps.weight = prob.phase_s / contention;
    ps.report = solve(prob, options);
    sol.phases.push_back(std::move(ps));
  }
  return sol;
}

double ChainDistribution::total() const {
  double sum = empty;
  for (const auto& stage : stages)
    for (double b : stage) sum += b;
  return sum;
}

ChainDistribution reconstruct_chain(const PriorityClass& p, const ClassSolution& s) {
  ChainDistribution d;
  double pj = 1.0;
  for (int j = 0; j <= p.last_stage(); ++j) {
    const int w = contention_window(p, j);
    std::vector<double> stage(static_cast<std::size_t>(w) + 1);
    stage[0] = pj * s.b000;
    for (int k = 1; k <= w; ++k)
      stage[static_cast<std::size_t>(k)] =
          static_cast<double>(w - k + 1) / w * pj / s.p_idle_i * s.b000;
    d.stages.push_back(std::move(stage));
    pj *= s.p_fail;
  }
  d.empty = (1.0 - s.rho) / s.rho * s.b000;
  return d;
}

}  // namespace wban
