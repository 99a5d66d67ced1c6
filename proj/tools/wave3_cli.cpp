#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return wave3::cli::run_cli(argc, argv, std::cout, std::cerr); }
