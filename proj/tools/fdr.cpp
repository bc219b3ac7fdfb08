#include <iostream>

#include "fdr/cli.hpp"

int main(int argc, char** argv) { return fdr::run_cli({argv, argv + argc}, std::cout, std::cerr); }
