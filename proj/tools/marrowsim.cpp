#include <iostream>

#include "marrow/cli.hpp"

int main(int argc, char** argv) { return marrow::run_cli(argc, argv, std::cout, std::cerr); }
