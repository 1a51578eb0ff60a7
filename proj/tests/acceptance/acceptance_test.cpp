// Acceptance run: one PASS/FAIL line per criterion, followed by the
// measurements behind it. Exits nonzero if any criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "../test_support.hpp"
#include "num/dual_decomp.hpp"
#include "num/gabp.hpp"
#include "num/ipm.hpp"

namespace {

using namespace num;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok    " : "MISS  ") + what);
  }
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

struct IpmOutcome {
  ConvergenceTrace trace;
  bool converged = false;
  std::string failure;
  std::size_t steps() const { return trace.empty() ? 0 : trace.back().outer_iteration; }
};

IpmOutcome run_ipm(const ProblemInstance& inst, Backend backend) {
  IpmOutcome out;
  try {
    auto r = solve_ipm(inst, IpmConfig{}, backend);
    out.trace = std::move(r.trace);
    out.converged = r.converged;
  } catch (const IpmFailure& e) {
    out.trace = e.trace();
    out.failure = e.what();
  }
  return out;
}

std::string describe(const IpmOutcome& o) {
  std::string s = fmt("steps=%zu final_gap=%.3e inner_total=%zu", o.steps(), o.trace.empty() ? 0.0 : o.trace.back().gap,
                      o.trace.total_inner_iterations());
  if (!o.converged) s += o.failure.empty() ? " (step cap)" : " failure=\"" + o.failure + "\"";
  return s;
}

// Runs shared by criteria 1-3 on the n = 1000, m = 2000 instance.
struct SmallExperiment {
  IpmOutcome direct, pcg, gabp;
  DualDecompResult dual;
  double seconds = 0.0;
};

SmallExperiment small_experiment() {
  auto start = Clock::now();
  SmallExperiment e;
  auto inst = generate_instance(GeneratorParams{});  // n=1000, m=2000, route-len 10, cap U[0.1,1], seed 42
  e.direct = run_ipm(inst, Backend::Direct);
  e.pcg = run_ipm(inst, Backend::Pcg);
  e.gabp = run_ipm(inst, Backend::Gabp);
  DualDecompConfig cfg;
  cfg.max_iters = 1000;
  e.dual = solve_dual_decomp(inst, cfg);
  e.seconds = seconds_since(start);
  return e;
}

Verdict criterion1(const SmallExperiment& e) {
  Verdict v;
  auto reaches = [](const IpmOutcome& o) { return o.converged && o.steps() <= 20; };
  v.check(reaches(e.gabp), "ipm-gabp reaches gap <= 1e-4 within 20 Newton steps: " + describe(e.gabp));
  v.check(reaches(e.direct), "ipm-direct reaches gap <= 1e-4 within 20 Newton steps: " + describe(e.direct));
  // Dual decomposition after as many trace rows as the direct run used.
  const std::size_t rows = e.direct.trace.rows().size();
  const auto& dd = e.dual.trace.rows();
  if (rows == 0 || dd.size() < rows) {
    v.check(false, "dual decomposition trace too short for comparison");
  } else {
    double newton_gap = e.direct.trace.back().gap;
    double dd_gap = dd[rows - 1].gap;
    v.check(dd_gap >= 10.0 * newton_gap,
            fmt("dual decomposition gap after %zu rows %.3e >= 10 x ipm-direct gap %.3e", rows, dd_gap, newton_gap));
  }
  v.check(e.seconds < 60.0, fmt("runtime %.1f s < 60 s", e.seconds));
  return v;
}

Verdict criterion2(const SmallExperiment& e) {
  Verdict v;
  v.check(e.gabp.converged && e.gabp.steps() >= 8 && e.gabp.steps() <= 20,
          "ipm-gabp Newton steps in [8, 20]: " + describe(e.gabp));
  v.check(e.pcg.converged && e.pcg.steps() >= 8 && e.pcg.steps() <= 25,
          "ipm-pcg Newton steps in [8, 25]: " + describe(e.pcg));
  return v;
}

Verdict criterion3(const SmallExperiment& e) {
  Verdict v;
  const auto& g = e.gabp.trace.rows();
  if (g.size() < 2) {
    v.check(false, "ipm-gabp took no Newton step");
  } else {
    std::size_t lo = SIZE_MAX, hi = 0;
    for (std::size_t k = 1; k < g.size(); ++k) {
      lo = std::min(lo, g[k].inner_iterations);
      hi = std::max(hi, g[k].inner_iterations);
    }
    double ratio = lo == 0 ? INFINITY : static_cast<double>(hi) / static_cast<double>(lo);
    std::string per_step;
    for (std::size_t k = 1; k < g.size(); ++k) per_step += (k > 1 ? "," : "") + std::to_string(g[k].inner_iterations);
    v.check(ratio <= 3.0, fmt("GaBP rounds max/min = %zu/%zu = %.2f <= 3 (per step: %s)", hi, lo, ratio,
                              per_step.c_str()));
  }
  const auto& p = e.pcg.trace.rows();
  bool failure_event = !e.pcg.failure.empty();
  if (p.size() < 2) {
    v.check(failure_event, "ipm-pcg recorded a breakdown or line-search failure before any step");
  } else {
    std::size_t first = p[1].inner_iterations, last = p.back().inner_iterations;
    v.check(last >= 2 * first || failure_event,
            fmt("PCG iterations last/first step = %zu/%zu >= 2%s", last, first,
                failure_event ? " or failure event recorded" : ""));
  }
  return v;
}

Verdict criterion4(std::vector<Vector>& solutions) {
  Verdict v;
  auto start = Clock::now();
  int converged = 0, matched = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    std::size_t n = std::vector<std::size_t>{10, 50, 200}[seed % 3];
    auto sys = testing::random_dominant_system(n, rng, 4.0 / static_cast<double>(n));
    auto r = solve_gabp(sys, 1e-8, 10 * n);
    double err = testing::max_abs_diff(r.x, solve_direct(sys).x);
    worst = std::max(worst, err);
    converged += r.converged ? 1 : 0;
    matched += (r.converged && err <= 1e-6) ? 1 : 0;
    solutions.push_back(r.x);
  }
  double secs = seconds_since(start);
  v.check(converged == 50, fmt("%d/50 systems converged", converged));
  v.check(matched == 50, fmt("%d/50 match direct to 1e-6 (worst l-inf %.2e)", matched, worst));
  v.check(secs < 10.0, fmt("runtime %.2f s < 10 s", secs));
  return v;
}

Verdict criterion5(std::vector<Vector>& solutions) {
  Verdict v;
  double worst_lu = 0.0, worst_gabp = 0.0;
  int gabp_converged = 0, lu_ok = 0, gabp_ok = 0;
  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    std::size_t n = 20 + static_cast<std::size_t>(k % 5) * 15;  // n + m <= 300
    std::size_t m = 2 * n;
    auto inst = testing::small_instance(n, m, 500 + static_cast<std::uint64_t>(k), 4.0);
    auto st = testing::random_interior_state(inst, rng);
    auto sys = assemble_symmetric_system(inst, st);
    Vector direct = solve_direct(sys).x;
    Vector lu = testing::unsymmetric_newton_step(inst, st);
    double rel = testing::max_abs_diff(direct, lu) / norm_inf(lu);
    worst_lu = std::max(worst_lu, rel);
    lu_ok += rel <= 1e-10 ? 1 : 0;
    auto g = solve_gabp(sys, 1e-10, 5000);
    if (g.converged) {
      ++gabp_converged;
      double grel = testing::max_abs_diff(g.x, direct) / norm_inf(direct);
      worst_gabp = std::max(worst_gabp, grel);
      gabp_ok += grel <= 1e-6 ? 1 : 0;
    }
    solutions.push_back(direct);
    solutions.push_back(g.x);
  }
  v.check(lu_ok == 100, fmt("%d/100 symmetric direct solves match dense LU of the unsymmetric system to 1e-10 "
                            "(worst %.2e)", lu_ok, worst_lu));
  v.check(gabp_ok == gabp_converged,
          fmt("%d/%d converged GaBP solves match direct to 1e-6 (worst %.2e)", gabp_ok, gabp_converged, worst_gabp));
  return v;
}

Verdict criterion6() {
  Verdict v;
  auto inst = generate_instance(GeneratorParams{});
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  const double h = 1e-6;
  int bad = 0, checked = 0;
  double worst = 0.0;
  for (int p = 0; p < 20; ++p) {
    Vector lambda(inst.m());
    for (double& x : lambda) x = u(rng);
    Vector slack = inst.slack(flow_update(inst, lambda));
    for (int c = 0; c < 25; ++c) {
      std::size_t i = detail::uniform_index(rng, inst.m());
      Vector up = lambda, down = lambda;
      up[i] += h;
      down[i] -= h;
      double fd = (dual_objective(inst, up) - dual_objective(inst, down)) / (2 * h);
      double rel = std::abs(fd - slack[i]) / std::abs(slack[i]);
      worst = std::max(worst, rel);
      ++checked;
      bad += rel <= 1e-4 ? 0 : 1;
    }
  }
  v.check(bad == 0, fmt("%d/%d coordinates within 1e-4 relative over 20 points (worst %.2e)", checked - bad, checked,
                        worst));
  return v;
}

Verdict criterion7() {
  Verdict v;
  for (double c : {1.0, 0.3, 4.0}) {
    ProblemInstance inst(SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}}), Vector{c});
    IpmConfig cfg;
    cfg.gap_tol = 1e-8;
    for (auto backend : {Backend::Direct, Backend::Pcg, Backend::Gabp}) {
      auto r = solve_ipm(inst, cfg, backend);
      double ef = std::abs(r.state.f()[0] - c), el = std::abs(r.state.lambda[0] - 1.0 / c);
      v.check(r.converged && r.trace.back().gap <= 1e-8 && ef <= 1e-6 * c && el <= 1e-6 / c,
              fmt("c=%g %s: f=%.10f lambda=%.10f gap=%.2e", c, backend_name(backend).c_str(), r.state.f()[0],
                  r.state.lambda[0], r.trace.back().gap));
    }
    // The dual curvature at the optimum is c^2, so the price map has slope 1 - alpha c^2 there.
    DualDecompConfig dd;
    dd.alpha = 0.1 / (c * c);
    dd.gap_tol = 1e-8;
    dd.max_iters = 20000;
    try {
      auto d = solve_dual_decomp(inst, dd);
      v.check(std::abs(d.f[0] - c) <= 1e-3 * c && std::abs(d.lambda[0] - 1.0 / c) <= 1e-3 / c,
              fmt("c=%g dualdecomp alpha=%g: f=%.6f lambda=%.6f", c, *dd.alpha, d.f[0], d.lambda[0]));
    } catch (const Error& e) {
      v.check(false, fmt("c=%g dualdecomp alpha=%g: %s", c, *dd.alpha, e.what()));
    }
  }
  return v;
}

bool same(const IpmOutcome& a, const IpmOutcome& b) {
  return a.trace.same_numbers(b.trace) && a.failure == b.failure;
}

int report(int id, const Verdict& v) {
  std::printf("%s criterion %d\n", v.pass ? "PASS" : "FAIL", id);
  for (const auto& n : v.notes) std::printf("      %s\n", n.c_str());
  std::fflush(stdout);
  return v.pass ? 0 : 1;
}

}  // namespace

int main() {
  int failures = 0;
  SmallExperiment first = small_experiment();
  failures += report(1, criterion1(first));
  failures += report(2, criterion2(first));
  failures += report(3, criterion3(first));
  std::vector<Vector> c4_first, c5_first;
  failures += report(4, criterion4(c4_first));
  failures += report(5, criterion5(c5_first));
  failures += report(6, criterion6());
  failures += report(7, criterion7());

  Verdict v8;
  SmallExperiment second = small_experiment();
  v8.check(same(first.direct, second.direct), "ipm-direct trace identical");
  v8.check(same(first.pcg, second.pcg), "ipm-pcg trace identical");
  v8.check(same(first.gabp, second.gabp), "ipm-gabp trace identical");
  v8.check(first.dual.trace.same_numbers(second.dual.trace), "dualdecomp trace identical");
  std::vector<Vector> c4_second, c5_second;
  criterion4(c4_second);
  criterion5(c5_second);
  v8.check(c4_first == c4_second, "criterion 4 solutions identical");
  v8.check(c5_first == c5_second, "criterion 5 solutions identical");
  failures += report(8, v8);

  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
