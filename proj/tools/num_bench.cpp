#include <iostream>

#include "num/cli.hpp"

int main(int argc, char** argv) { return num::bench_main(argc, argv, std::cout, std::cerr); }
