#include <iostream>

#include "rydroute/cli.hpp"

int main(int argc, char** argv) { return rydroute::cli::run(argc, argv, std::cin, std::cout, std::cerr); }
