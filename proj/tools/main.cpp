#include "normality/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return normality::cli::run(argc, argv, std::cout, std::cerr); }
