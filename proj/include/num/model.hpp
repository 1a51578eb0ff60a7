#ifndef NUM_MODEL_HPP
#define NUM_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "num/error.hpp"
#include "num/sparse.hpp"

namespace num {

/**
 * Concave, twice differentiable utility shared by every flow of an instance.
 *
 * `conjugate` is the conjugate of the negated utility,
 * (-U)*(a) = sup_{x >= 0} (a x + U(x)), finite only where
 * `in_conjugate_domain(a)` holds.
 */
class Utility {
 public:
  virtual ~Utility() = default;

  virtual std::string name() const = 0;
  virtual bool in_domain(double x) const = 0;
  virtual double value(double x) const = 0;
  virtual double gradient(double x) const = 0;
  virtual double curvature(double x) const = 0;
  virtual bool in_conjugate_domain(double a) const = 0;
  virtual double conjugate(double a) const = 0;

  /**
   * argmax_{x >= 0} U(x) - price * x. The default brackets the root of
   * U'(x) = price and bisects it down to `tol`; U' is nonincreasing, so
   * the bracket is always valid. Throws if U' stays above the price
   * (the supremum is not attained).
   */
  virtual double best_response(double price, double tol = 1e-10) const {
    double lo = 0.0;
    if (!in_domain(lo)) lo = std::numeric_limits<double>::min();
    if (gradient(lo) <= price) return 0.0;
    double hi = 1.0;
    while (gradient(hi) > price) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi) || hi > 1e300) throw ParameterError("best response unbounded");
    }
    while (hi - lo > tol * std::max(1.0, hi)) {
      double mid = 0.5 * (lo + hi);
      (gradient(mid) > price ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

/// U(x) = log x.
class LogUtility final : public Utility {
 public:
  std::string name() const override { return "log"; }
  bool in_domain(double x) const override { return x > 0.0; }
  double value(double x) const override { return std::log(x); }
  double gradient(double x) const override { return 1.0 / x; }
  double curvature(double x) const override { return -1.0 / (x * x); }
  bool in_conjugate_domain(double a) const override { return a < 0.0; }
  double conjugate(double a) const override { return -1.0 - std::log(-a); }
  double best_response(double price, double /*tol*/ = 1e-10) const override { return 1.0 / price; }
};

inline std::shared_ptr<const Utility> log_utility() {
  static const auto instance = std::make_shared<const LogUtility>();
  return instance;
}

/**
 * Immutable NUM instance: m links, n flows, 0/1 routing matrix R (m x n),
 * positive capacities, one utility family.
 *
 * R is kept both by link (rows) and by flow (columns of R, stored as rows
 * of R^T) so that link loads and route prices are both a single sweep.
 */
class ProblemInstance {
 public:
  ProblemInstance(SparseMatrix routes, Vector capacities,
                  std::shared_ptr<const Utility> utility = log_utility(), std::uint64_t seed = 0)
      : routes_(std::move(routes)),
        by_flow_(routes_.transpose()),
        capacities_(std::move(capacities)),
        utility_(std::move(utility)),
        seed_(seed) {
    if (routes_.rows() == 0 || routes_.cols() == 0) throw ParameterError("instance needs m, n > 0");
    if (capacities_.size() != routes_.rows()) throw ParameterError("capacity count must equal link count");
    if (!utility_) throw ParameterError("instance needs a utility");
    for (double v : routes_.values()) {
      if (v != 1.0) throw ParameterError("routing matrix entries must be 0 or 1");
    }
    for (std::size_t i = 0; i < m(); ++i) {
      if (!(capacities_[i] > 0.0) || !std::isfinite(capacities_[i])) {
        throw ParameterError("capacity " + std::to_string(i) + " must be positive");
      }
      if (routes_.row_cols(i).empty()) throw ParameterError("link " + std::to_string(i) + " carries no flow");
    }
    for (std::size_t j = 0; j < n(); ++j) {
      if (by_flow_.row_cols(j).empty()) throw ParameterError("flow " + std::to_string(j) + " uses no link");
    }
  }

  std::size_t n() const noexcept { return routes_.cols(); }
  std::size_t m() const noexcept { return routes_.rows(); }
  const SparseMatrix& routes() const noexcept { return routes_; }
  /// R^T: row j lists the links on flow j's route.
  const SparseMatrix& routes_by_flow() const noexcept { return by_flow_; }
  const Vector& capacities() const noexcept { return capacities_; }
  const Utility& utility() const noexcept { return *utility_; }
  std::shared_ptr<const Utility> utility_ptr() const noexcept { return utility_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// R f
  Vector link_load(std::span<const double> f) const { return routes_.multiply(f); }
  /// R^T lambda
  Vector route_price(std::span<const double> lambda) const { return by_flow_.multiply(lambda); }
  /// c - R f
  Vector slack(std::span<const double> f) const {
    Vector s = link_load(f);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = capacities_[i] - s[i];
    return s;
  }

 private:
  SparseMatrix routes_;
  SparseMatrix by_flow_;
  Vector capacities_;
  std::shared_ptr<const Utility> utility_;
  std::uint64_t seed_;
};

/**
 * Primal-dual point of the interior-point method. `s` is derived from `f`
 * and is only ever set through `set_flows`.
 */
class IterateState {
 public:
  IterateState(const ProblemInstance& inst, Vector f, Vector lambda, Vector mu, double t)
      : lambda(std::move(lambda)), mu(std::move(mu)), t(t) {
    if (f.size() != inst.n() || this->lambda.size() != inst.m() || this->mu.size() != inst.n()) {
      throw ParameterError("state dimensions do not match instance");
    }
    set_flows(inst, std::move(f));
  }

  const Vector& f() const noexcept { return f_; }
  const Vector& s() const noexcept { return s_; }

  void set_flows(const ProblemInstance& inst, Vector f) {
    f_ = std::move(f);
    s_ = inst.slack(f_);
  }

  /// Throws StateError unless f, s, lambda, mu > 0 and t > 0.
  void require_interior() const {
    auto check = [](const Vector& v, const char* name) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) throw StateError(std::string(name) + "[" + std::to_string(i) + "] is not positive");
      }
    };
    check(f_, "f");
    check(s_, "s");
    check(lambda, "lambda");
    check(mu, "mu");
    if (!(t > 0.0)) throw StateError("barrier parameter t is not positive");
  }

  Vector lambda;
  Vector mu;
  double t;

 private:
  Vector f_;
  Vector s_;
};

/// Sum of utilities. Throws DomainError naming the first out-of-domain rate.
inline double total_utility(const ProblemInstance& inst, std::span<const double> f) {
  const Utility& u = inst.utility();
  double total = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (!u.in_domain(f[j])) throw DomainError("flow rate outside utility domain", j);
    total += u.value(f[j]);
  }
  return total;
}

/// lambda^T c + sum_j (-U)*(-r_j^T lambda); an upper bound on the primal optimum.
inline double dual_objective(const ProblemInstance& inst, std::span<const double> lambda) {
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < 0.0) throw DomainError("negative link price", i);
  }
  const Utility& u = inst.utility();
  double value = dot(lambda, inst.capacities());
  Vector price = inst.route_price(lambda);
  for (std::size_t j = 0; j < price.size(); ++j) {
    if (!u.in_conjugate_domain(-price[j])) throw InfeasibleDualError("route price outside conjugate domain", j);
    value += u.conjugate(-price[j]);
  }
  return value;
}

struct GeneratorParams {
  std::size_t n = 1000;
  std::size_t m = 2000;
  double avg_route_len = 10.0;
  double cap_lo = 0.1;
  double cap_hi = 1.0;
  std::uint64_t seed = 42;
};

namespace detail {

// Fixed conversions from raw mt19937_64 output; the standard distributions
// are implementation-defined and would break cross-platform determinism.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound) {
  auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(bound));
  return std::min(idx, bound - 1);
}

}  // namespace detail

/**
 * Random instance: every (link, flow) entry of R is an independent
 * Bernoulli(avg_route_len / m) draw, capacities are Uniform[lo, hi], then
 * each empty column and each empty row receives one uniformly placed
 * nonzero. The Bernoulli field is sampled by geometric skipping over the
 * flow-major linear index, which has the same law as per-entry draws.
 * Generator: std::mt19937_64 seeded with `seed`.
 */
inline ProblemInstance generate_instance(const GeneratorParams& p) {
  if (p.n == 0 || p.m == 0) throw ParameterError("n and m must be positive");
  if (!(p.avg_route_len > 0.0) || p.avg_route_len > static_cast<double>(p.m)) {
    throw ParameterError("average route length must lie in (0, m]");
  }
  if (!(p.cap_lo > 0.0) || p.cap_hi < p.cap_lo) throw ParameterError("capacity range must satisfy 0 < lo <= hi");

  std::mt19937_64 rng(p.seed);
  const double prob = p.avg_route_len / static_cast<double>(p.m);
  const std::uint64_t total = static_cast<std::uint64_t>(p.n) * p.m;

  std::vector<Triplet<double>> entries;
  entries.reserve(static_cast<std::size_t>(prob * static_cast<double>(total) * 1.1) + 16);
  if (prob >= 1.0) {
    for (std::uint64_t k = 0; k < total; ++k) entries.push_back({k % p.m, k / p.m, 1.0});
  } else {
    const double log_q = std::log1p(-prob);
    std::uint64_t k = 0;
    while (true) {
      double u = 1.0 - detail::uniform01(rng);  // (0, 1]
      double skip = std::floor(std::log(u) / log_q);
      if (skip >= static_cast<double>(total - k)) break;
      k += static_cast<std::uint64_t>(skip);
      entries.push_back({k % p.m, k / p.m, 1.0});
      if (++k >= total) break;
    }
  }

  Vector capacities(p.m);
  for (double& c : capacities) c = p.cap_lo + (p.cap_hi - p.cap_lo) * detail::uniform01(rng);

  std::vector<bool> col_used(p.n, false);
  std::vector<bool> row_used(p.m, false);
  for (const auto& e : entries) {
    col_used[e.col] = true;
    row_used[e.row] = true;
  }
  for (std::size_t j = 0; j < p.n; ++j) {
    if (col_used[j]) continue;
    std::size_t i = detail::uniform_index(rng, p.m);
    entries.push_back({i, j, 1.0});
    row_used[i] = true;
  }
  for (std::size_t i = 0; i < p.m; ++i) {
    if (row_used[i]) continue;
    entries.push_back({i, detail::uniform_index(rng, p.n), 1.0});
  }

  return ProblemInstance(SparseMatrix::from_triplets(p.m, p.n, std::move(entries)), std::move(capacities),
                         log_utility(), p.seed);
}

/// f = gamma * 1 with gamma = margin * min_i c_i / (R 1)_i, so R f <= margin * c.
inline Vector feasible_start(const ProblemInstance& inst, double margin) {
  if (!(margin > 0.0 && margin < 1.0)) throw ParameterError("margin must lie in (0, 1)");
  double gamma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < inst.m(); ++i) {
    auto row_sum = static_cast<double>(inst.routes().row_cols(i).size());
    gamma = std::min(gamma, inst.capacities()[i] / row_sum);
  }
  return Vector(inst.n(), margin * gamma);
}

// Instance file, line oriented:
//   NUM v1 n m nnz seed
//   c i value         (one per link)
//   r i j             (one per routing nonzero; link i, flow j, 0-based)

inline void write_instance(const ProblemInstance& inst, std::ostream& out) {
  out << "NUM v1 " << inst.n() << ' ' << inst.m() << ' ' << inst.routes().nnz() << ' ' << inst.seed() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < inst.m(); ++i) out << "c " << i << ' ' << inst.capacities()[i] << '\n';
  for (std::size_t i = 0; i < inst.m(); ++i) {
    for (std::size_t j : inst.routes().row_cols(i)) out << "r " << i << ' ' << j << '\n';
  }
}

inline ProblemInstance read_instance(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw ParseError("missing header", line_no);
  std::istringstream header(line);
  std::string magic, version;
  std::size_t n = 0, m = 0, nnz = 0;
  std::uint64_t seed = 0;
  if (!(header >> magic >> version >> n >> m >> nnz >> seed) || magic != "NUM" || version != "v1") {
    throw ParseError("expected header 'NUM v1 n m nnz seed'", line_no);
  }
  if (n == 0 || m == 0) throw ParseError("n and m must be positive", line_no);

  Vector capacities(m, 0.0);
  std::vector<bool> have_cap(m, false);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<Triplet<double>> entries;
  while (next_line()) {
    std::istringstream row(line);
    std::string tag;
    row >> tag;
    std::string rest;
    if (tag == "c") {
      std::size_t i = 0;
      double value = 0.0;
      if (!(row >> i >> value) || (row >> rest)) throw ParseError("malformed capacity line", line_no);
      if (i >= m) throw ParseError("link index out of range", line_no);
      if (have_cap[i]) throw ParseError("duplicate capacity", line_no);
      have_cap[i] = true;
      capacities[i] = value;
    } else if (tag == "r") {
      std::size_t i = 0, j = 0;
      if (!(row >> i >> j) || (row >> rest)) throw ParseError("malformed routing line", line_no);
      if (i >= m || j >= n) throw ParseError("routing index out of range", line_no);
      if (!seen.insert({i, j}).second) throw ParseError("duplicate routing triplet", line_no);
      entries.push_back({i, j, 1.0});
    } else {
      throw ParseError("unknown record '" + tag + "'", line_no);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!have_cap[i]) throw ParseError("missing capacity for link " + std::to_string(i), line_no);
  }
  if (entries.size() != nnz) throw ParseError("nonzero count does not match header", line_no);
  try {
    return ProblemInstance(SparseMatrix::from_triplets(m, n, std::move(entries)), std::move(capacities),
                           log_utility(), seed);
  } catch (const ParameterError& e) {
    throw ParseError(e.what(), line_no);
  }
}

inline void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_instance(inst, out);
  if (!out) throw Error("failed writing " + path.string());
}

inline ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_instance(in);
}

}  // namespace num

#endif  // NUM_MODEL_HPP
