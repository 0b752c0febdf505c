#include <iostream>

#include "ccrf/cli.hpp"

int main(int argc, char** argv) { return ccrf::cli::main(argc, argv, std::cout, std::cerr); }
