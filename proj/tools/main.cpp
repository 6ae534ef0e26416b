#include <iostream>

#include "safelens/cli.hpp"

int main(int argc, char** argv) { return safelens::run_cli(argc, argv, std::cout, std::cerr); }
