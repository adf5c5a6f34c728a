#include "kdpc/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return kdpc::cli::run(argc, argv, std::cout, std::cerr); }
