#ifndef NUM_GABP_HPP
#define NUM_GABP_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "num/error.hpp"
#include "num/linsolve.hpp"
#include "num/sparse.hpp"

namespace num {

/**
 * Gaussian graphical model of a symmetric system A x = b.
 *
 * Node i carries the prior precision A_ii and prior mean b_i / A_ii. Every
 * off-diagonal nonzero A_ij is a directed edge i -> j; the edges leaving
 * node i are contiguous (CSR row order), and `reverse[e]` is the index of
 * the opposite edge j -> i, through which node i receives its message
 * from neighbor j.
 */
struct GabpGraph {
  Vector prior_precision;
  Vector prior_mean;
  std::vector<std::size_t> edge_from;
  std::vector<std::size_t> edge_to;
  Vector coupling;
  std::vector<std::size_t> reverse;
  std::vector<std::size_t> out_offsets;  // edges of node i: [out_offsets[i], out_offsets[i + 1])

  std::size_t size() const noexcept { return prior_precision.size(); }
  std::size_t edge_count() const noexcept { return edge_from.size(); }

  static GabpGraph build(const SymmetricSystem& sys) {
    const SparseMatrix& a = sys.a;
    if (a.rows() != a.cols() || sys.b.size() != a.rows()) throw ParameterError("system dimensions do not match");
    GabpGraph g;
    const std::size_t n = a.rows();
    g.prior_precision.resize(n);
    g.prior_mean.resize(n);
    g.out_offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double aii = a.at(i, i);
      if (aii == 0.0) throw DegeneracyError("zero diagonal gives no prior", i, i);
      g.prior_precision[i] = aii;
      g.prior_mean[i] = sys.b[i] / aii;
      auto cols = a.row_cols(i);
      auto vals = a.row_values(i);
      for (std::size_t k = 0; k < cols.size(); ++k) {
        if (cols[k] == i || vals[k] == 0.0) continue;
        g.edge_from.push_back(i);
        g.edge_to.push_back(cols[k]);
        g.coupling.push_back(vals[k]);
      }
      g.out_offsets[i + 1] = g.edge_from.size();
    }
    g.reverse.resize(g.edge_count());
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
      std::size_t j = g.edge_to[e];
      auto first = g.edge_to.begin() + static_cast<std::ptrdiff_t>(g.out_offsets[j]);
      auto last = g.edge_to.begin() + static_cast<std::ptrdiff_t>(g.out_offsets[j + 1]);
      auto it = std::lower_bound(first, last, g.edge_from[e]);
      if (it == last || *it != g.edge_from[e]) throw ParameterError("matrix pattern is not symmetric");
      g.reverse[e] = static_cast<std::size_t>(it - g.edge_to.begin());
    }
    return g;
  }
};

/// Messages P_ij, mu_ij on every directed edge i -> j, indexed like GabpGraph edges.
struct GabpState {
  Vector precision;
  Vector mean;
  std::size_t round = 0;

  static GabpState initial(const GabpGraph& g) {
    return GabpState{Vector(g.edge_count(), 0.0), Vector(g.edge_count(), 0.0), 0};
  }
};

/**
 * One synchronous round: every new message is computed from the previous
 * round's messages only.
 *
 *   P_i\j  = P_ii + sum_{k in N(i)\j} P_ki
 *   mu_i\j = (P_ii mu_ii + sum_{k in N(i)\j} P_ki mu_ki) / P_i\j
 *   P_ij   = -A_ij A_ji / P_i\j
 *   mu_ij  = -A_ij mu_i\j / P_ij
 *
 * The exclusion sums are formed as node totals minus the message from j.
 * With `damping` > 0 each message is blended with its previous value
 * (new = (1 - damping) * computed + damping * old).
 */
inline GabpState gabp_round(const GabpGraph& g, const GabpState& state, double damping = 0.0) {
  GabpState next{Vector(g.edge_count()), Vector(g.edge_count()), state.round + 1};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t first = g.out_offsets[i];
    const std::size_t last = g.out_offsets[i + 1];
    double p_total = g.prior_precision[i];
    double h_total = g.prior_precision[i] * g.prior_mean[i];
    for (std::size_t e = first; e < last; ++e) {
      const std::size_t in = g.reverse[e];
      p_total += state.precision[in];
      h_total += state.precision[in] * state.mean[in];
    }
    for (std::size_t e = first; e < last; ++e) {
      const std::size_t in = g.reverse[e];
      const double p_excl = p_total - state.precision[in];
      if (p_excl == 0.0) throw DegeneracyError("zero cavity precision", i, g.edge_to[e]);
      const double mu_excl = (h_total - state.precision[in] * state.mean[in]) / p_excl;
      const double p_msg = -g.coupling[e] * g.coupling[in] / p_excl;
      if (p_msg == 0.0) throw DegeneracyError("zero message precision", i, g.edge_to[e]);
      const double mu_msg = -g.coupling[e] * mu_excl / p_msg;
      next.precision[e] = (1.0 - damping) * p_msg + damping * state.precision[e];
      next.mean[e] = (1.0 - damping) * mu_msg + damping * state.mean[e];
    }
  }
  return next;
}

struct GabpMarginals {
  Vector mean;       // x_i
  Vector precision;  // P_i, approximate
};

/// Marginal means and precisions from the current messages; valid before convergence too.
inline GabpMarginals gabp_infer(const GabpGraph& g, const GabpState& state) {
  GabpMarginals out{Vector(g.size()), Vector(g.size())};
  for (std::size_t i = 0; i < g.size(); ++i) {
    double p = g.prior_precision[i];
    double h = g.prior_precision[i] * g.prior_mean[i];
    for (std::size_t e = g.out_offsets[i]; e < g.out_offsets[i + 1]; ++e) {
      const std::size_t in = g.reverse[e];
      p += state.precision[in];
      h += state.precision[in] * state.mean[in];
    }
    if (p == 0.0) throw DegeneracyError("zero marginal precision", i, i);
    out.precision[i] = p;
    out.mean[i] = h / p;
  }
  return out;
}

/// Largest message change between two states (l-infinity over both families).
inline double message_change(const GabpState& a, const GabpState& b) {
  double change = 0.0;
  for (std::size_t e = 0; e < a.precision.size(); ++e) {
    change = std::max(change, std::abs(a.precision[e] - b.precision[e]));
    change = std::max(change, std::abs(a.mean[e] - b.mean[e]));
  }
  return std::isnan(change) ? std::numeric_limits<double>::infinity() : change;
}

/**
 * Sufficient conditions for convergence; failing both does not mean
 * divergence.
 *
 * `rho_estimate` is rho(|I - A_n|) with A_n = D^-1/2 A D^-1/2 and
 * D = |diag A|. Nodes with a negative diagonal get A_n,ii = -1, so the
 * estimate is at least 2 for indefinite diagonals; `rho_offdiag` drops
 * the diagonal of A_n and is the walk-sum quantity in that case.
 */
struct ConvergenceDiagnostics {
  bool diagonally_dominant = true;
  double rho_estimate = 0.0;
  double rho_offdiag = 0.0;
};

namespace detail {

// Spectral radius of a nonnegative symmetric matrix by power iteration on
// B + I, whose Perron root rho + 1 strictly dominates even for bipartite
// patterns where -rho is also an eigenvalue.
inline double nonnegative_spectral_radius(const SparseMatrix& b, std::size_t max_iters = 500, double tol = 1e-10) {
  const std::size_t n = b.rows();
  if (n == 0) return 0.0;
  Vector x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  Vector y(n);
  double estimate = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    b.multiply(x, y);
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
    double norm = norm2(y);
    if (norm == 0.0) return 0.0;
    double next = norm - 1.0;
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / norm;
    if (std::abs(next - estimate) <= tol * std::max(1.0, std::abs(next))) return std::max(0.0, next);
    estimate = next;
  }
  return std::max(0.0, estimate);
}

}  // namespace detail

inline ConvergenceDiagnostics convergence_diagnostics(const SymmetricSystem& sys) {
  const SparseMatrix& a = sys.a;
  const std::size_t n = a.rows();
  ConvergenceDiagnostics out;
  Vector scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = std::abs(a.at(i, i));
    scale[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  std::vector<Triplet<double>> full;
  std::vector<Triplet<double>> offdiag;
  for (std::size_t i = 0; i < n; ++i) {
    double off_sum = 0.0;
    double diag = 0.0;
    bool has_diag = false;
    auto cols = a.row_cols(i);
    auto vals = a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::size_t j = cols[k];
      const double normalized = scale[i] * vals[k] * scale[j];
      if (j == i) {
        diag = vals[k];
        has_diag = true;
        full.push_back({i, i, std::abs(1.0 - normalized)});
      } else {
        off_sum += std::abs(vals[k]);
        full.push_back({i, j, std::abs(normalized)});
        offdiag.push_back({i, j, std::abs(normalized)});
      }
    }
    if (!has_diag) full.push_back({i, i, 1.0});
    if (!(std::abs(diag) > off_sum)) out.diagonally_dominant = false;
  }
  out.rho_estimate = detail::nonnegative_spectral_radius(SparseMatrix::from_triplets(n, n, std::move(full)));
  out.rho_offdiag = detail::nonnegative_spectral_radius(SparseMatrix::from_triplets(n, n, std::move(offdiag)));
  return out;
}

struct GabpOptions {
  double damping = 0.0;
  bool diagnostics = true;
};

/**
 * Solves A x = b by synchronous GaBP rounds until the largest message
 * change is at most `tol`. On non-convergence (round cap, or messages
 * overflowing) returns converged = false with the last finite estimate.
 */
inline SolveReport solve_gabp(const SymmetricSystem& sys, double tol, std::size_t max_rounds,
                              const GabpOptions& options = {}) {
  if (!(tol > 0.0)) throw ParameterError("GaBP tolerance must be positive");
  if (options.damping < 0.0 || options.damping >= 1.0) throw ParameterError("damping must lie in [0, 1)");
  const GabpGraph graph = GabpGraph::build(sys);

  SolveReport report;
  GabpState state = GabpState::initial(graph);
  report.x = gabp_infer(graph, state).mean;
  double change = 0.0;
  bool diverged = false;
  if (graph.edge_count() == 0) {
    report.converged = true;
  } else {
    while (state.round < max_rounds) {
      GabpState next = gabp_round(graph, state, options.damping);
      change = message_change(next, state);
      if (!std::isfinite(change)) {
        diverged = true;
        break;
      }
      Vector x = gabp_infer(graph, next).mean;
      if (std::any_of(x.begin(), x.end(), [](double v) { return !std::isfinite(v); })) {
        diverged = true;
        break;
      }
      state = std::move(next);
      report.x = std::move(x);
      if (change <= tol) {
        report.converged = true;
        break;
      }
    }
  }

  report.inner_iterations = state.round;
  report.final_residual = relative_residual(sys, report.x);
  if (!std::isfinite(report.final_residual)) report.converged = false;
  report.diagnostics["rounds"] = std::to_string(state.round);
  report.diagnostics["max_message_change"] = detail::to_string_exact(change);
  report.diagnostics["diverged"] = diverged ? "true" : "false";
  if (options.diagnostics) {
    ConvergenceDiagnostics d = convergence_diagnostics(sys);
    report.diagnostics["diag_dominant"] = d.diagonally_dominant ? "true" : "false";
    report.diagnostics["rho_estimate"] = detail::to_string_exact(d.rho_estimate);
    report.diagnostics["rho_offdiag"] = detail::to_string_exact(d.rho_offdiag);
  }
  return report;
}

}  // namespace num

#endif  // NUM_GABP_HPP
