#include <iostream>

#include "icsim/cli.hpp"

int main(int argc, char** argv) { return icsim::run_cli(argc, argv, std::cout, std::cerr); }
