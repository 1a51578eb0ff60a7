#ifndef NUM_DUAL_DECOMP_HPP
#define NUM_DUAL_DECOMP_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "num/error.hpp"
#include "num/model.hpp"
#include "num/trace.hpp"

namespace num {

/// 0.1 * min(c) / (largest number of flows on one link).
inline double default_step_size(const ProblemInstance& inst) {
  double min_c = *std::min_element(inst.capacities().begin(), inst.capacities().end());
  std::size_t max_row = 0;
  for (std::size_t i = 0; i < inst.m(); ++i) max_row = std::max(max_row, inst.routes().row_cols(i).size());
  return 0.1 * min_c / static_cast<double>(max_row);
}

struct DualDecompConfig {
  std::optional<double> alpha;   // unset: default_step_size
  std::size_t max_iters = 1000;
  std::optional<Vector> lambda0;  // unset: all ones
  double gap_tol = 1e-4;

  void validate(const ProblemInstance& inst) const {
    if (alpha && !(*alpha > 0.0)) throw ParameterError("alpha must be positive");
    if (max_iters < 1) throw ParameterError("max_iters must be at least 1");
    if (!(gap_tol > 0.0)) throw ParameterError("gap_tol must be positive");
    if (lambda0) {
      if (lambda0->size() != inst.m()) throw ParameterError("lambda0 length must equal link count");
      for (double v : *lambda0) {
        if (!(v > 0.0)) throw ParameterError("lambda0 must be positive");
      }
    }
  }
};

/// Per-flow best response to route prices R^T lambda.
inline Vector flow_update(const ProblemInstance& inst, std::span<const double> lambda) {
  Vector price = inst.route_price(lambda);
  const Utility& u = inst.utility();
  for (std::size_t j = 0; j < price.size(); ++j) {
    if (!(price[j] > 0.0)) throw UnboundedSubproblemError("route price is not positive", j);
    price[j] = u.best_response(price[j]);
  }
  return price;
}

/// (lambda - alpha (c - R f))_+
inline Vector price_update(const ProblemInstance& inst, std::span<const double> lambda, std::span<const double> f,
                           double alpha) {
  if (!(alpha > 0.0)) throw ParameterError("alpha must be positive");
  Vector s = inst.slack(f);
  Vector next(lambda.begin(), lambda.end());
  for (std::size_t i = 0; i < next.size(); ++i) next[i] = std::max(next[i] - alpha * s[i], 0.0);
  return next;
}

/// f scaled by min(1, min_i c_i / (R f)_i), which is feasible for f >= 0.
inline Vector feasible_projection(const ProblemInstance& inst, std::span<const double> f) {
  Vector load = inst.link_load(f);
  double scale = 1.0;
  for (std::size_t i = 0; i < load.size(); ++i) {
    if (load[i] > 0.0) scale = std::min(scale, inst.capacities()[i] / load[i]);
  }
  Vector out(f.begin(), f.end());
  for (double& v : out) v *= scale;
  return out;
}

struct DualDecompResult {
  Vector f;
  Vector lambda;
  ConvergenceTrace trace;
  bool converged = false;
  std::vector<double> dual_objective;  // per iteration
  std::vector<double> utility;         // of the raw, possibly infeasible iterate
};

/**
 * Projected subgradient ascent on the dual. Iteration k computes
 * f = flow_update(lambda) and records the bound
 * dual_objective(lambda) - total_utility(feasible_projection(f)), then
 * moves lambda along the slack. Stops when the bound is at most gap_tol
 * or after max_iters rows.
 *
 * Trace rows use the bound as gap and eta, the largest capacity violation
 * max_i (R f - c)_i^+ as r_dual, and zero for r_cent and inner.
 */
inline DualDecompResult solve_dual_decomp(const ProblemInstance& inst, const DualDecompConfig& cfg) {
  cfg.validate(inst);
  using Clock = std::chrono::steady_clock;
  const double alpha = cfg.alpha ? *cfg.alpha : default_step_size(inst);

  DualDecompResult result;
  result.lambda = cfg.lambda0 ? *cfg.lambda0 : Vector(inst.m(), 1.0);
  ConvergenceTrace& trace = result.trace;
  trace.meta.seed = inst.seed();
  trace.meta.n = inst.n();
  trace.meta.m = inst.m();
  trace.meta.solver = "dualdecomp";
  trace.meta.gap_definition = "dual_bound";
  trace.meta.config = {{"alpha", detail::format_double(alpha)},
                       {"max_iters", std::to_string(cfg.max_iters)},
                       {"gap_tol", detail::format_double(cfg.gap_tol)}};
  trace.meta.termination = "max_iters";

  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    const auto start = Clock::now();
    result.f = flow_update(inst, result.lambda);
    const double dual = dual_objective(inst, result.lambda);
    const double bound = dual - total_utility(inst, feasible_projection(inst, result.f));
    result.dual_objective.push_back(dual);
    result.utility.push_back(total_utility(inst, result.f));

    double violation = 0.0;
    Vector s = inst.slack(result.f);
    for (double v : s) violation = std::max(violation, -v);

    const bool done = bound <= cfg.gap_tol;
    if (!done) result.lambda = price_update(inst, result.lambda, result.f, alpha);
    double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    trace.add_row(TraceRow{k, bound, bound, violation, 0.0, 0, "dualdecomp", ms});
    if (done) {
      result.converged = true;
      trace.meta.termination = "converged";
      break;
    }
  }
  return result;
}

}  // namespace num

#endif  // NUM_DUAL_DECOMP_HPP
