#include "num/cli.hpp"

#include "CLI11.hpp"
#include "num/bench.hpp"

namespace num {

int bench_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Network utility maximization benchmark"};
  BenchOptions options;

  std::vector<std::string> generate;
  std::string instance, builtin, out_path, write_path, format = "csv";
  std::optional<double> alpha;
  std::size_t dd_iters = options.dual.max_iters;

  app.add_option("--generate", generate, "Random instance: n= m= route-len= cap=lo,hi seed=")->expected(1, 5);
  app.add_option("--instance", instance, "Instance file");
  app.add_option("--builtin", builtin, "Builtin instance")->check(CLI::IsMember({"single-link"}));
  app.add_flag("--large", options.large, "n=10000, m=20000 instance");
  app.add_option("--solver", options.solver, "Solver")
      ->check(CLI::IsMember({"dualdecomp", "ipm-direct", "ipm-pcg", "ipm-gabp", "all"}));
  app.add_option("--gap-tol", options.ipm.gap_tol, "Stopping tolerance on the gap");
  app.add_option("--max-newton", options.ipm.max_newton_steps, "Newton step cap");
  app.add_option("--pcg-tol", options.ipm.pcg_tol, "PCG relative tolerance, scaled by min(1, gap)");
  app.add_option("--pcg-max-iters", options.ipm.pcg_max_iters, "PCG iteration cap per step (0: 2N)");
  app.add_option("--gabp-tol", options.ipm.gabp_tol, "GaBP message tolerance");
  app.add_option("--gabp-max-rounds", options.ipm.gabp_max_rounds, "GaBP round cap per step");
  app.add_option("--gabp-damping", options.ipm.gabp_damping, "GaBP message damping in [0, 1)");
  app.add_option("--alpha", alpha, "Dual decomposition step size");
  app.add_option("--dd-max-iters", dd_iters, "Dual decomposition iteration cap");
  app.add_option("--out", out_path, "Trace path");
  app.add_option("--format", format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--write-instance", write_path, "Save the instance to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (!generate.empty()) options.generate = parse_generate(generate);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (!instance.empty()) options.instance = instance;
  if (!builtin.empty()) options.builtin = builtin;
  if (!out_path.empty()) options.out = out_path;
  if (!write_path.empty()) options.write_instance = write_path;
  options.format = format == "json" ? TraceFormat::Json : TraceFormat::Csv;
  options.dual.alpha = alpha;
  options.dual.max_iters = dd_iters;
  options.dual.gap_tol = options.ipm.gap_tol;
  return run_benchmark(options, out, err);
}

}  // namespace num
