#include <iostream>

#include "ecospeed/cli.hpp"

int main(int argc, char** argv) { return ecospeed::cli::run(argc, argv, std::cout, std::cerr); }
