#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return lc2::cli::run(argc, argv, std::cout, std::cerr); }
