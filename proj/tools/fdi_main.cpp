#include "fdi/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fdi::cli::run(argc, argv, std::cout, std::cerr); }
