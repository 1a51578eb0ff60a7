#ifndef NUM_BENCH_HPP
#define NUM_BENCH_HPP

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "num/dual_decomp.hpp"
#include "num/error.hpp"
#include "num/ipm.hpp"
#include "num/model.hpp"
#include "num/trace.hpp"

namespace num {

inline const std::vector<std::string>& solver_ids() {
  static const std::vector<std::string> ids{"dualdecomp", "ipm-direct", "ipm-pcg", "ipm-gabp"};
  return ids;
}

struct BenchOptions {
  std::optional<GeneratorParams> generate;
  std::optional<std::filesystem::path> instance;
  std::optional<std::string> builtin;  // "single-link"
  bool large = false;

  std::string solver = "all";
  IpmConfig ipm;
  DualDecompConfig dual;
  std::optional<std::filesystem::path> out;
  TraceFormat format = TraceFormat::Csv;
  std::optional<std::filesystem::path> write_instance;
};

/// Parses `n=1000 m=2000 route-len=10 cap=0.1,1 seed=42`; omitted keys keep their defaults.
inline GeneratorParams parse_generate(const std::vector<std::string>& tokens) {
  GeneratorParams p;
  auto number = [](const std::string& key, const std::string& text) {
    try {
      std::size_t used = 0;
      double v = std::stod(text, &used);
      if (used != text.size()) throw ParameterError("");
      return v;
    } catch (const std::exception&) {
      throw ParameterError("bad value '" + text + "' for " + key);
    }
  };
  auto count = [](const std::string& key, const std::string& text) {
    try {
      std::size_t used = 0;
      unsigned long long v = std::stoull(text, &used);
      if (used != text.size() || text.front() == '-') throw ParameterError("");
      return v;
    } catch (const std::exception&) {
      throw ParameterError("bad value '" + text + "' for " + key);
    }
  };
  for (const auto& token : tokens) {
    auto eq = token.find('=');
    if (eq == std::string::npos) throw ParameterError("expected key=value, got '" + token + "'");
    std::string key = token.substr(0, eq);
    std::string value = token.substr(eq + 1);
    if (key == "n") {
      p.n = count(key, value);
    } else if (key == "m") {
      p.m = count(key, value);
    } else if (key == "route-len") {
      p.avg_route_len = number(key, value);
    } else if (key == "cap") {
      auto comma = value.find(',');
      if (comma == std::string::npos) throw ParameterError("cap expects lo,hi");
      p.cap_lo = number(key, value.substr(0, comma));
      p.cap_hi = number(key, value.substr(comma + 1));
    } else if (key == "seed") {
      p.seed = count(key, value);
    } else {
      throw ParameterError("unknown generator key '" + key + "'");
    }
  }
  return p;
}

/// One flow on one link of capacity 1.
inline ProblemInstance single_link_instance(double capacity = 1.0) {
  return ProblemInstance(SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}}), Vector{capacity});
}

/// Path of the trace for `solver`: `--out` verbatim for a single solver,
/// with `.solver` inserted before the extension when several run.
inline std::filesystem::path trace_path(const BenchOptions& options, const std::string& solver, bool several) {
  const char* ext = options.format == TraceFormat::Csv ? ".csv" : ".json";
  if (!options.out) return std::filesystem::path("trace-" + solver + ext);
  if (!several) return *options.out;
  std::filesystem::path p = *options.out;
  std::string stem = p.stem().string();
  std::string extension = p.has_extension() ? p.extension().string() : std::string(ext);
  return p.parent_path() / (stem + "." + solver + extension);
}

inline ProblemInstance bench_instance(const BenchOptions& options) {
  int sources = (options.generate ? 1 : 0) + (options.instance ? 1 : 0) + (options.builtin ? 1 : 0) +
                (options.large ? 1 : 0);
  if (sources > 1) throw ParameterError("choose one of --generate, --instance, --builtin, --large");
  if (options.instance) return load_instance(*options.instance);
  if (options.builtin) {
    if (*options.builtin != "single-link") throw ParameterError("unknown builtin '" + *options.builtin + "'");
    return single_link_instance();
  }
  if (options.large) {
    GeneratorParams p;
    p.n = 10000;
    p.m = 20000;
    return generate_instance(p);
  }
  return generate_instance(options.generate.value_or(GeneratorParams{}));
}

struct BenchRun {
  std::string solver;
  ConvergenceTrace trace;
  bool converged = false;
  std::string error;
  Vector f;  // final flows; empty after a failure
};

inline BenchRun run_solver(const ProblemInstance& inst, const BenchOptions& options, const std::string& solver) {
  BenchRun run{solver, {}, false, {}, {}};
  if (solver == "dualdecomp") {
    try {
      DualDecompResult r = solve_dual_decomp(inst, options.dual);
      run.trace = std::move(r.trace);
      run.converged = r.converged;
      run.f = std::move(r.f);
    } catch (const Error& e) {
      run.error = e.what();
    }
    return run;
  }
  Backend backend = solver == "ipm-direct" ? Backend::Direct : solver == "ipm-pcg" ? Backend::Pcg : Backend::Gabp;
  try {
    IpmResult r = solve_ipm(inst, options.ipm, backend);
    run.trace = std::move(r.trace);
    run.converged = r.converged;
    run.f = r.state.f();
  } catch (const IpmFailure& e) {
    run.trace = e.trace();
    run.error = e.what();
  }
  return run;
}

inline std::string summary_line(const BenchRun& run) {
  char buf[512];
  const bool has_rows = !run.trace.empty();
  const std::size_t steps = has_rows ? run.trace.back().outer_iteration : 0;
  std::snprintf(buf, sizeof buf, "%-10s status=%s gap=%.6e outer=%zu inner=%zu ms=%.1f", run.solver.c_str(),
                run.converged ? "converged" : (run.error.empty() ? "not-converged" : "failed"),
                has_rows ? run.trace.back().gap : 0.0, steps, run.trace.total_inner_iterations(),
                run.trace.total_wall_time_ms());
  std::string line = buf;
  if (!run.error.empty()) line += " error=\"" + run.error + "\"";
  return line;
}

/**
 * Builds or loads the instance, runs the selected solvers in order, writes
 * one trace per solver and prints a summary line for each. Returns 0 when
 * every solver converged, 1 when one did not, 2 on invalid input or I/O
 * failure.
 */
inline int run_benchmark(const BenchOptions& options, std::ostream& out, std::ostream& err) {
  std::vector<std::string> solvers;
  if (options.solver == "all") {
    solvers = solver_ids();
  } else if (std::find(solver_ids().begin(), solver_ids().end(), options.solver) != solver_ids().end()) {
    solvers = {options.solver};
  } else {
    err << "error: unknown solver '" << options.solver << "'\n";
    return 2;
  }

  std::optional<ProblemInstance> inst;
  try {
    options.ipm.validate();
    inst.emplace(bench_instance(options));
    options.dual.validate(*inst);
    if (options.write_instance) save_instance(*inst, *options.write_instance);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  out << "instance n=" << inst->n() << " m=" << inst->m() << " nnz=" << inst->routes().nnz()
      << " seed=" << inst->seed() << '\n';
  bool all_converged = true;
  for (const auto& solver : solvers) {
    BenchRun run = run_solver(*inst, options, solver);
    all_converged = all_converged && run.converged;
    std::filesystem::path path = trace_path(options, solver, solvers.size() > 1);
    try {
      emit_trace(run.trace, options.format, path);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
    out << summary_line(run) << " trace=" << path.string() << '\n';
    if (!run.error.empty()) err << "error: " << solver << ": " << run.error << '\n';
  }
  return all_converged ? 0 : 1;
}

}  // namespace num

#endif  // NUM_BENCH_HPP
