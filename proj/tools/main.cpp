#include <iostream>

#include "mtdc/cli.hpp"

int main(int argc, char** argv) { return mtdc::cli::run(argc, argv, std::cout, std::cerr); }
