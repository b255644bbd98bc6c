#include <iostream>

#include "ptqm/cli.hpp"

int main(int argc, char** argv) { return ptqm::cli::main_entry(argc, argv, std::cout, std::cerr); }
