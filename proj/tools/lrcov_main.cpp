#include <iostream>

#include "lrcov/cli.hpp"

int main(int argc, char** argv) { return lrcov::run_cli(argc, argv, std::cout, std::cerr); }
