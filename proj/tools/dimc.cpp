#include <iostream>

#include "dimc/cli.hpp"

int main(int argc, char** argv) { return dimc::cli::run(argc, argv, std::cout, std::cerr); }
