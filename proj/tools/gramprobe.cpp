#include <iostream>

#include "gramprobe/cli.hpp"

int main(int argc, char** argv) { return gramprobe::cli::run(argc, argv, std::cout, std::cerr); }
