#include <iostream>

#include "invlab/cli.hpp"

int main(int argc, char** argv) { return invlab::cli_main(argc, argv, std::cout, std::cerr); }
