// Solves max log f subject to f <= 2 with each backend and prints the
// optimum, which is f = 2 with link price 1/2.
#include <cstdio>

#include "num/dual_decomp.hpp"
#include "num/ipm.hpp"

int main() {
  num::ProblemInstance inst(num::SparseMatrix::from_triplets(1, 1, {{0, 0, 1.0}}), num::Vector{2.0});

  num::IpmConfig cfg;
  cfg.gap_tol = 1e-8;
  for (auto backend : {num::Backend::Direct, num::Backend::Pcg, num::Backend::Gabp}) {
    num::IpmResult r = num::solve_ipm(inst, cfg, backend);
    std::printf("%-6s f=%.8f lambda=%.8f steps=%zu\n", num::backend_name(backend).c_str(), r.state.f()[0],
                r.state.lambda[0], r.newton_steps);
  }

  num::DualDecompConfig dd;
  dd.gap_tol = 1e-8;
  dd.max_iters = 5000;
  num::DualDecompResult r = num::solve_dual_decomp(inst, dd);
  std::printf("%-6s f=%.8f lambda=%.8f iters=%zu\n", "dual", r.f[0], r.lambda[0], r.trace.rows().size());
}
