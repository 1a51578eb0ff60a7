#ifndef NUM_IPM_HPP
#define NUM_IPM_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "num/error.hpp"
#include "num/gabp.hpp"
#include "num/linsolve.hpp"
#include "num/model.hpp"
#include "num/trace.hpp"

namespace num {

/// r_t(f, lambda, mu) split into its dual and two centering blocks.
struct KktResidual {
  Vector r_dual;       // -grad U(f) + R^T lambda - mu
  Vector r_cent_link;  // diag(lambda) s - 1/t
  Vector r_cent_flow;  // diag(mu) f - 1/t

  double dual_norm() const { return norm2(r_dual); }
  double cent_norm() const {
    double a = norm2(r_cent_link);
    double b = norm2(r_cent_flow);
    return std::sqrt(a * a + b * b);
  }
  double norm() const {
    double d = dual_norm();
    double c = cent_norm();
    return std::sqrt(d * d + c * c);
  }
};

struct NewtonDirection {
  Vector df;
  Vector dlambda;
  Vector dmu;
};

enum class Backend { Direct, Pcg, Gabp };

inline std::string backend_name(Backend b) {
  switch (b) {
    case Backend::Direct:
      return "direct";
    case Backend::Pcg:
      return "pcg";
    case Backend::Gabp:
      return "gabp";
  }
  return "unknown";
}

struct IpmConfig {
  double gap_tol = 1e-4;
  double t_factor = 10.0;
  double ls_alpha = 0.01;
  double ls_beta = 0.5;
  double frac_to_boundary = 0.99;
  std::size_t max_newton_steps = 50;
  double start_margin = 0.9;

  double pcg_tol = 1e-2;           // scaled by min(1, gap) each step
  std::size_t pcg_max_iters = 0;   // 0: twice the system order
  Preconditioner pcg_preconditioner = Preconditioner::Jacobi;
  double gabp_tol = 1e-6;
  std::size_t gabp_max_rounds = 1000;
  double gabp_damping = 0.0;
  std::size_t dense_limit = 3000;

  void validate() const {
    if (!(gap_tol > 0.0)) throw ParameterError("gap_tol must be positive");
    if (!(t_factor > 1.0)) throw ParameterError("t_factor must exceed 1");
    if (!(ls_alpha > 0.0 && ls_alpha < 0.5)) throw ParameterError("ls_alpha must lie in (0, 0.5)");
    if (!(ls_beta > 0.0 && ls_beta < 1.0)) throw ParameterError("ls_beta must lie in (0, 1)");
    if (!(frac_to_boundary > 0.0 && frac_to_boundary < 1.0)) {
      throw ParameterError("frac_to_boundary must lie in (0, 1)");
    }
    if (!(pcg_tol > 0.0) || !(gabp_tol > 0.0)) throw ParameterError("inner tolerances must be positive");
    if (gabp_damping < 0.0 || gabp_damping >= 1.0) throw ParameterError("gabp_damping must lie in [0, 1)");
  }

  std::map<std::string, std::string> snapshot() const {
    auto str = [](double v) { return detail::format_double(v); };
    return {
        {"gap_tol", str(gap_tol)},
        {"t_factor", str(t_factor)},
        {"ls_alpha", str(ls_alpha)},
        {"ls_beta", str(ls_beta)},
        {"frac_to_boundary", str(frac_to_boundary)},
        {"max_newton_steps", std::to_string(max_newton_steps)},
        {"start_margin", str(start_margin)},
        {"pcg_tol", str(pcg_tol)},
        {"pcg_max_iters", std::to_string(pcg_max_iters)},
        {"gabp_tol", str(gabp_tol)},
        {"gabp_max_rounds", std::to_string(gabp_max_rounds)},
        {"gabp_damping", str(gabp_damping)},
    };
  }
};

inline KktResidual residual(const ProblemInstance& inst, const IterateState& state) {
  state.require_interior();
  const Utility& u = inst.utility();
  const Vector& f = state.f();
  const Vector& s = state.s();
  const double inv_t = 1.0 / state.t;
  KktResidual r;
  r.r_dual = inst.route_price(state.lambda);
  for (std::size_t j = 0; j < inst.n(); ++j) r.r_dual[j] += -u.gradient(f[j]) - state.mu[j];
  r.r_cent_link.resize(inst.m());
  for (std::size_t i = 0; i < inst.m(); ++i) r.r_cent_link[i] = state.lambda[i] * s[i] - inv_t;
  r.r_cent_flow.resize(inst.n());
  for (std::size_t j = 0; j < inst.n(); ++j) r.r_cent_flow[j] = state.mu[j] * f[j] - inv_t;
  return r;
}

/// s^T lambda + f^T mu
inline double surrogate_gap(const IterateState& state) {
  return dot(state.s(), state.lambda) + dot(state.f(), state.mu);
}

/**
 * Symmetric form of the primal-dual Newton system, unknowns ordered
 * (df, dlambda, dmu):
 *
 *   [ -hess U(f)   R^T            -I          ] [df     ]   [ -r_dual               ]
 *   [  R           -diag(s/lam)    0          ] [dlambda] = [ s - 1/(t lambda)      ]
 *   [ -I            0             -diag(f/mu) ] [dmu    ]   [ f - 1/(t mu)          ]
 *
 * obtained by scaling the block rows of the unsymmetric Newton system by
 * (1, -1/lambda, -1/mu).
 */
inline SymmetricSystem assemble_symmetric_system(const ProblemInstance& inst, const IterateState& state) {
  const KktResidual r = residual(inst, state);
  const std::size_t n = inst.n();
  const std::size_t m = inst.m();
  const std::size_t dim = 2 * n + m;
  const Utility& u = inst.utility();
  const Vector& f = state.f();
  const Vector& s = state.s();
  const SparseMatrix& by_flow = inst.routes_by_flow();
  const SparseMatrix& by_link = inst.routes();

  // Rows are emitted in column order directly, so no sort is needed.
  std::vector<std::size_t> row_ptr(dim + 1, 0);
  std::vector<std::size_t> cols;
  Vector vals;
  cols.reserve(dim + 2 * (by_link.nnz() + n));
  vals.reserve(cols.capacity());
  for (std::size_t j = 0; j < n; ++j) {
    cols.push_back(j);
    vals.push_back(-u.curvature(f[j]));
    for (std::size_t i : by_flow.row_cols(j)) {
      cols.push_back(n + i);
      vals.push_back(1.0);
    }
    cols.push_back(n + m + j);
    vals.push_back(-1.0);
    row_ptr[j + 1] = cols.size();
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j : by_link.row_cols(i)) {
      cols.push_back(j);
      vals.push_back(1.0);
    }
    cols.push_back(n + i);
    vals.push_back(-s[i] / state.lambda[i]);
    row_ptr[n + i + 1] = cols.size();
  }
  for (std::size_t j = 0; j < n; ++j) {
    cols.push_back(j);
    vals.push_back(-1.0);
    cols.push_back(n + m + j);
    vals.push_back(-f[j] / state.mu[j]);
    row_ptr[n + m + j + 1] = cols.size();
  }

  SymmetricSystem sys;
  sys.a = SparseMatrix(dim, dim, std::move(row_ptr), std::move(cols), std::move(vals));
  sys.block_sizes = {n, m, n};
  sys.b.resize(dim);
  for (std::size_t j = 0; j < n; ++j) sys.b[j] = -r.r_dual[j];
  for (std::size_t i = 0; i < m; ++i) sys.b[n + i] = r.r_cent_link[i] / state.lambda[i];
  for (std::size_t j = 0; j < n; ++j) sys.b[n + m + j] = r.r_cent_flow[j] / state.mu[j];
  return sys;
}

inline NewtonDirection split_direction(const ProblemInstance& inst, std::span<const double> x) {
  const std::size_t n = inst.n();
  const std::size_t m = inst.m();
  if (x.size() != 2 * n + m) throw ParameterError("solution length does not match instance");
  return NewtonDirection{Vector(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n)),
                         Vector(x.begin() + static_cast<std::ptrdiff_t>(n),
                                x.begin() + static_cast<std::ptrdiff_t>(n + m)),
                         Vector(x.begin() + static_cast<std::ptrdiff_t>(n + m), x.end())};
}

/// frac * sup{theta : f, lambda, mu, s stay positive along dir}, capped at 1.
inline double max_step(const ProblemInstance& inst, const IterateState& state, const NewtonDirection& dir,
                       double frac_to_boundary) {
  double sup = std::numeric_limits<double>::infinity();
  auto limit = [&sup](const Vector& v, const Vector& dv) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (dv[k] < 0.0) sup = std::min(sup, -v[k] / dv[k]);
    }
  };
  limit(state.f(), dir.df);
  limit(state.lambda, dir.dlambda);
  limit(state.mu, dir.dmu);
  Vector ds = inst.link_load(dir.df);
  for (double& v : ds) v = -v;
  limit(state.s(), ds);
  return std::min(1.0, frac_to_boundary * sup);
}

inline IterateState take_step(const ProblemInstance& inst, const IterateState& state, const NewtonDirection& dir,
                              double theta) {
  Vector f = state.f();
  Vector lambda = state.lambda;
  Vector mu = state.mu;
  for (std::size_t j = 0; j < f.size(); ++j) f[j] += theta * dir.df[j];
  for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] += theta * dir.dlambda[i];
  for (std::size_t j = 0; j < mu.size(); ++j) mu[j] += theta * dir.dmu[j];
  return IterateState(inst, std::move(f), std::move(lambda), std::move(mu), state.t);
}

inline constexpr double kMinStep = 1e-12;

/**
 * Backtracking from the fraction-to-boundary step until
 * ||r_t(y + theta dy)|| <= (1 - ls_alpha theta) ||r_t(y)||, at fixed t.
 */
inline double line_search(const ProblemInstance& inst, const IterateState& state, const NewtonDirection& dir,
                          const IpmConfig& cfg) {
  for (const Vector* v : {&dir.df, &dir.dlambda, &dir.dmu}) {
    for (double x : *v) {
      if (!std::isfinite(x)) throw LineSearchError("non-finite search direction");
    }
  }
  const double base = residual(inst, state).norm();
  double theta = max_step(inst, state, dir, cfg.frac_to_boundary);
  while (theta >= kMinStep) {
    IterateState trial = take_step(inst, state, dir, theta);
    bool interior = true;
    try {
      trial.require_interior();
    } catch (const StateError&) {
      interior = false;
    }
    if (interior && residual(inst, trial).norm() <= (1.0 - cfg.ls_alpha * theta) * base) return theta;
    theta *= cfg.ls_beta;
  }
  throw LineSearchError("no step length decreases the residual");
}

/// Abort of the interior-point loop; carries the trace recorded so far.
class IpmFailure : public Error {
 public:
  enum class Kind { Backend, LineSearch };

  IpmFailure(Kind kind, const std::string& what, ConvergenceTrace trace)
      : Error(what), kind_(kind), trace_(std::move(trace)) {}

  Kind kind() const noexcept { return kind_; }
  const ConvergenceTrace& trace() const noexcept { return trace_; }

 private:
  Kind kind_;
  ConvergenceTrace trace_;
};

struct IpmResult {
  IterateState state;
  ConvergenceTrace trace;
  bool converged = false;
  std::size_t newton_steps = 0;
  std::vector<std::map<std::string, std::string>> step_diagnostics;
};

/// Exact duality gap at (f, lambda), when lambda is dual feasible.
inline std::optional<double> exact_gap(const ProblemInstance& inst, const IterateState& state) {
  try {
    return dual_objective(inst, state.lambda) - total_utility(inst, state.f());
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline SolveReport solve_newton_system(const SymmetricSystem& sys, Backend backend, const IpmConfig& cfg,
                                       double gap) {
  switch (backend) {
    case Backend::Direct:
      return solve_direct(sys, DirectOptions{cfg.dense_limit});
    case Backend::Pcg: {
      std::size_t max_iters = cfg.pcg_max_iters ? cfg.pcg_max_iters : 2 * sys.dim();
      return solve_pcg(sys, cfg.pcg_tol * std::min(1.0, gap), max_iters, PcgOptions{cfg.pcg_preconditioner});
    }
    case Backend::Gabp:
      return solve_gabp(sys, cfg.gabp_tol, cfg.gabp_max_rounds, GabpOptions{cfg.gabp_damping});
  }
  throw ParameterError("unknown backend");
}

/**
 * Primal-dual interior-point method from f = feasible_start(margin),
 * lambda = mu = 1. Each outer step sets t = t_factor (m + n) / gap, solves
 * the symmetric Newton system with the chosen backend and line searches
 * on the residual norm. Stops once the surrogate gap and the dual
 * residual norm are both at most gap_tol.
 *
 * Row k of the trace describes the state after k Newton steps; its
 * centering residual is evaluated at the t the next step uses and its
 * inner count is that of step k. An unconverged inner solve is still
 * line-searched (truncated Newton); a solver exception, a non-finite
 * direction or a failed line search aborts with IpmFailure.
 */
inline IpmResult solve_ipm(const ProblemInstance& inst, const IpmConfig& cfg, Backend backend) {
  cfg.validate();
  using Clock = std::chrono::steady_clock;
  const double constraints = static_cast<double>(inst.m() + inst.n());

  IpmResult result{IterateState(inst, feasible_start(inst, cfg.start_margin), Vector(inst.m(), 1.0),
                                Vector(inst.n(), 1.0), 1.0),
                   {}, false, 0, {}};
  ConvergenceTrace& trace = result.trace;
  trace.meta.seed = inst.seed();
  trace.meta.n = inst.n();
  trace.meta.m = inst.m();
  trace.meta.solver = "ipm-" + backend_name(backend);
  trace.meta.gap_definition = "surrogate";
  trace.meta.config = cfg.snapshot();

  IterateState& state = result.state;
  std::size_t inner = 0;
  double step_ms = 0.0;
  for (std::size_t step = 0;; ++step) {
    const double gap = surrogate_gap(state);
    state.t = cfg.t_factor * constraints / gap;
    const KktResidual r = residual(inst, state);
    trace.add_row(TraceRow{step, gap, exact_gap(inst, state), r.dual_norm(), r.cent_norm(), inner,
                           backend_name(backend), step_ms});

    if (gap <= cfg.gap_tol && r.dual_norm() <= cfg.gap_tol) {
      result.converged = true;
      trace.meta.termination = "converged";
      break;
    }
    if (step == cfg.max_newton_steps) {
      trace.meta.termination = "max_newton_steps";
      break;
    }

    const auto start = Clock::now();
    const SymmetricSystem sys = assemble_symmetric_system(inst, state);
    SolveReport report;
    try {
      report = solve_newton_system(sys, backend, cfg, gap);
    } catch (const Error& e) {
      trace.meta.termination = std::string("backend_failure: ") + e.what();
      throw IpmFailure(IpmFailure::Kind::Backend, trace.meta.termination, trace);
    }
    report.diagnostics["converged"] = report.converged ? "true" : "false";
    report.diagnostics["final_residual"] = detail::format_double(report.final_residual);
    result.step_diagnostics.push_back(report.diagnostics);

    const NewtonDirection dir = split_direction(inst, report.x);
    double theta = 0.0;
    try {
      theta = line_search(inst, state, dir, cfg);
    } catch (const LineSearchError& e) {
      trace.meta.termination = std::string("line_search_failure: ") + e.what();
      throw IpmFailure(IpmFailure::Kind::LineSearch, trace.meta.termination, trace);
    }
    state = take_step(inst, state, dir, theta);
    result.step_diagnostics.back()["step_length"] = detail::format_double(theta);
    inner = report.inner_iterations;
    step_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    result.newton_steps = step + 1;
  }
  return result;
}

}  // namespace num

#endif  // NUM_IPM_HPP
