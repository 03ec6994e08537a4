#include <iostream>

#include "rewardkit/cli.hpp"

int main(int argc, char** argv) { return rewardkit::run_cli(argc, argv, std::cout, std::cerr); }
