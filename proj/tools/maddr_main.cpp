#include <iostream>

#include "maddr/cli.hpp"

int main(int argc, char** argv) { return maddr::run_cli(argc, argv, std::cout, std::cerr); }
