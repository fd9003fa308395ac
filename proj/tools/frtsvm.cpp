#include "frtsvm_cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return frtsvm::cli::run(argc, argv, std::cout, std::cerr); }
