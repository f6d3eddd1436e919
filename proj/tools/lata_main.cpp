#include <iostream>

#include "lata/cli.hpp"

int main(int argc, char** argv) { return lata::cli::run(argc, argv, std::cout, std::cerr); }
