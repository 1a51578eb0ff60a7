#ifndef NUM_LINSOLVE_HPP
#define NUM_LINSOLVE_HPP

#include <lapacke.h>

#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "num/error.hpp"
#include "num/sparse.hpp"

namespace num {

/**
 * One symmetric Newton system A x = b. `block_sizes` is (n, m, n) for
 * systems assembled by the interior-point method and informational only.
 */
struct SymmetricSystem {
  SparseMatrix a;
  Vector b;
  std::array<std::size_t, 3> block_sizes{0, 0, 0};

  std::size_t dim() const noexcept { return a.rows(); }

  /// Throws unless A is square, exactly symmetric, has a nonzero diagonal and matches b.
  void validate() const {
    if (a.rows() != a.cols() || b.size() != a.rows()) throw ParameterError("system dimensions do not match");
    if (!a.is_symmetric()) throw ParameterError("system matrix is not symmetric");
    for (std::size_t i = 0; i < dim(); ++i) {
      if (a.at(i, i) == 0.0) throw ParameterError("zero diagonal entry " + std::to_string(i));
    }
  }
};

struct SolveReport {
  Vector x;
  std::size_t inner_iterations = 0;
  double final_residual = 0.0;  // ||A x - b|| / ||b||, recomputed from x
  bool converged = false;
  std::map<std::string, std::string> diagnostics;
};

inline double relative_residual(const SymmetricSystem& sys, std::span<const double> x) {
  Vector r = sys.a.multiply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= sys.b[i];
  double nb = norm2(sys.b);
  return nb == 0.0 ? norm2(r) : norm2(r) / nb;
}

namespace detail {

inline std::string to_string_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// One step of iterative refinement against the original matrix.
template <typename Solve>
void refine(const SymmetricSystem& sys, Vector& x, Solve&& solve) {
  Vector r = sys.a.multiply(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = sys.b[i] - r[i];
  Vector dx = solve(r);
  Vector candidate = x;
  for (std::size_t i = 0; i < x.size(); ++i) candidate[i] += dx[i];
  if (relative_residual(sys, candidate) < relative_residual(sys, x)) x = std::move(candidate);
}

inline SolveReport solve_dense_bunch_kaufman(const SymmetricSystem& sys) {
  const auto n = static_cast<lapack_int>(sys.dim());
  std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
  for (std::size_t i = 0; i < sys.dim(); ++i) {
    auto cols = sys.a.row_cols(i);
    auto vals = sys.a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) a[i + cols[k] * sys.dim()] = vals[k];  // column major
  }
  double anorm = LAPACKE_dlansy(LAPACK_COL_MAJOR, '1', 'L', n, a.data(), n);
  std::vector<lapack_int> ipiv(static_cast<std::size_t>(n));
  lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, a.data(), n, ipiv.data());
  if (info > 0) throw FactorizationError("singular matrix in symmetric indefinite factorization", info - 1);
  if (info < 0) throw FactorizationError("invalid argument to dsytrf", info);

  double rcond = 0.0;
  LAPACKE_dsycon(LAPACK_COL_MAJOR, 'L', n, a.data(), n, ipiv.data(), anorm, &rcond);
  if (!(rcond > std::numeric_limits<double>::epsilon())) {
    // Name the 1x1 pivot of smallest magnitude as the culprit.
    std::ptrdiff_t worst = 0;
    double smallest = std::numeric_limits<double>::infinity();
    for (lapack_int k = 0; k < n; ++k) {
      double d = std::abs(a[static_cast<std::size_t>(k) * (n + 1)]);
      if (ipiv[k] > 0 && d < smallest) {
        smallest = d;
        worst = k;
      }
    }
    throw FactorizationError("numerically singular matrix (rcond " + to_string_exact(rcond) + ")", worst);
  }

  auto solve = [&](const Vector& rhs) {
    Vector x = rhs;
    LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, a.data(), n, ipiv.data(), x.data(), n);
    return x;
  };
  SolveReport report;
  report.x = solve(sys.b);
  refine(sys, report.x, solve);
  report.diagnostics["method"] = "dense-bunch-kaufman";
  report.diagnostics["rcond"] = to_string_exact(rcond);
  return report;
}

inline SolveReport solve_sparse_ldlt(const SymmetricSystem& sys) {
  using EigenSparse = Eigen::SparseMatrix<double>;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(sys.a.nnz());
  for (std::size_t i = 0; i < sys.dim(); ++i) {
    auto cols = sys.a.row_cols(i);
    auto vals = sys.a.row_values(i);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      entries.emplace_back(static_cast<int>(i), static_cast<int>(cols[k]), vals[k]);
    }
  }
  const auto n = static_cast<Eigen::Index>(sys.dim());
  EigenSparse a(n, n);
  a.setFromTriplets(entries.begin(), entries.end());

  Eigen::SimplicialLDLT<EigenSparse, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw FactorizationError("sparse LDL^T factorization failed", -1);
  const Eigen::VectorXd d = ldlt.vectorD();
  for (Eigen::Index k = 0; k < d.size(); ++k) {
    if (d[k] == 0.0 || !std::isfinite(d[k])) {
      throw FactorizationError("zero pivot in sparse LDL^T", ldlt.permutationPinv().indices()[k]);
    }
  }
  auto solve = [&](const Vector& rhs) {
    Eigen::Map<const Eigen::VectorXd> r(rhs.data(), n);
    Eigen::VectorXd x = ldlt.solve(r);
    return Vector(x.data(), x.data() + n);
  };
  SolveReport report;
  report.x = solve(sys.b);
  refine(sys, report.x, solve);
  report.diagnostics["method"] = "sparse-ldlt";
  return report;
}

}  // namespace detail

struct DirectOptions {
  /// Largest order factored densely with Bunch-Kaufman pivoting; larger systems use sparse static-pivot LDL^T.
  std::size_t dense_limit = 3000;
  /// Residual above which a sparse static-pivot solve is rejected as unstable.
  double sparse_residual_limit = 1e-6;
};

/**
 * Direct solve of a symmetric indefinite system. Dense Bunch-Kaufman LDL^T
 * (LAPACK dsytrf) up to `dense_limit`; above it a fill-reducing sparse
 * LDL^T without pivoting, which is well-defined for the quasi-definite
 * Newton systems the interior-point method produces. Both paths take one
 * step of iterative refinement.
 */
inline SolveReport solve_direct(const SymmetricSystem& sys, const DirectOptions& options = {}) {
  if (sys.a.rows() != sys.a.cols() || sys.b.size() != sys.a.rows()) {
    throw ParameterError("system dimensions do not match");
  }
  SolveReport report;
  if (sys.dim() <= options.dense_limit) {
    report = detail::solve_dense_bunch_kaufman(sys);
  } else {
    report = detail::solve_sparse_ldlt(sys);
  }
  report.final_residual = relative_residual(sys, report.x);
  if (!std::isfinite(report.final_residual)) throw FactorizationError("non-finite solution", -1);
  if (report.diagnostics["method"] == "sparse-ldlt" && report.final_residual > options.sparse_residual_limit) {
    throw FactorizationError("unstable static-pivot LDL^T (residual " +
                                 detail::to_string_exact(report.final_residual) + ")",
                             -1);
  }
  report.inner_iterations = 0;
  report.converged = true;
  return report;
}

enum class Preconditioner { Jacobi, Identity };

struct PcgOptions {
  Preconditioner preconditioner = Preconditioner::Jacobi;
  /// Breakdown when |p^T A p| <= breakdown_tol * ||p|| * ||A p||.
  double breakdown_tol = 1e-12;
};

/**
 * Conjugate gradient with a diagonal preconditioner (|diag A| by default).
 * Stops when the relative residual drops to `tol` or after `max_iters`.
 * A is not assumed definite; a vanishing curvature p^T A p is reported as
 * BreakdownError rather than silently producing garbage.
 */
inline SolveReport solve_pcg(const SymmetricSystem& sys, double tol, std::size_t max_iters,
                             const PcgOptions& options = {}) {
  if (!(tol > 0.0)) throw ParameterError("PCG tolerance must be positive");
  if (sys.a.rows() != sys.a.cols() || sys.b.size() != sys.a.rows()) {
    throw ParameterError("system dimensions do not match");
  }
  const std::size_t n = sys.dim();
  Vector inv_diag(n, 1.0);
  if (options.preconditioner == Preconditioner::Jacobi) {
    for (std::size_t i = 0; i < n; ++i) {
      double d = std::abs(sys.a.at(i, i));
      if (d == 0.0) throw ParameterError("Jacobi preconditioner needs a nonzero diagonal");
      inv_diag[i] = 1.0 / d;
    }
  }

  SolveReport report;
  report.x.assign(n, 0.0);
  report.diagnostics["preconditioner"] = options.preconditioner == Preconditioner::Jacobi ? "jacobi" : "identity";
  const double b_norm = norm2(sys.b);
  if (b_norm == 0.0) {
    report.converged = true;
    return report;
  }

  Vector r = sys.b;
  Vector z(n), p(n), ap(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = dot(r, z);
  double res = 1.0;

  std::size_t it = 0;
  while (true) {
    if (res <= tol) {
      // Guard against drift of the recursive residual.
      double true_res = relative_residual(sys, report.x);
      if (true_res <= tol) break;
      r = sys.a.multiply(report.x);
      for (std::size_t i = 0; i < n; ++i) r[i] = sys.b[i] - r[i];
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      p = z;
      rz = dot(r, z);
      res = true_res;
      if (res <= tol) break;
    }
    if (it >= max_iters) break;

    sys.a.multiply(p, ap);
    double curvature = dot(p, ap);
    if (std::abs(curvature) <= options.breakdown_tol * norm2(p) * norm2(ap) || !std::isfinite(curvature)) {
      throw BreakdownError("conjugate gradient curvature vanished", it);
    }
    double alpha = rz / curvature;
    for (std::size_t i = 0; i < n; ++i) {
      report.x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    double rz_next = dot(r, z);
    if (rz == 0.0) throw BreakdownError("preconditioned residual vanished", it);
    double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    res = norm2(r) / b_norm;
    ++it;
  }

  report.inner_iterations = it;
  report.final_residual = relative_residual(sys, report.x);
  report.converged = report.final_residual <= tol;
  return report;
}

}  // namespace num

#endif  // NUM_LINSOLVE_HPP
