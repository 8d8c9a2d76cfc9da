#include "remmap/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return remmap::cli::run(argc, argv, std::cout, std::cerr); }
