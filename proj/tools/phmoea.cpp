#include <iostream>

#include "phmoea/cli.hpp"

int main(int argc, char** argv) { return phmoea::run_cli(argc, argv, std::cout, std::cerr); }
