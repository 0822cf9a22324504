#include <iostream>

#include "pairadv/cli.hpp"

int main(int argc, char** argv) { return pairadv::run_cli(argc, argv, std::cout, std::cerr); }
