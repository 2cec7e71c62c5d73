#include <iostream>

#include "saekit/cli.hpp"

int main(int argc, char** argv) { return saekit::cli::run(argc, argv, std::cout, std::cerr); }
