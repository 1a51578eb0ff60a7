#ifndef NUM_CLI_HPP
#define NUM_CLI_HPP

#include <ostream>

namespace num {

/// Parses num_bench flags, runs run_benchmark and returns the exit status (2 on bad flags).
int bench_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace num

#endif  // NUM_CLI_HPP
