#include <iostream>

#include "estimand/cli/run.hpp"

int main(int argc, char** argv) { return estimand::cli::run_cli(argc, argv, std::cout, std::cerr); }
