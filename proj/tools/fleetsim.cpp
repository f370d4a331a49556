#include <iostream>

#include "fleetsim/cli.hpp"

int main(int argc, char** argv) { return fleetsim::run_cli(argc, argv, std::cout, std::cerr); }
