#include "spineviz/service.hpp"

#include <iostream>

int main(int argc, char** argv) { return spineviz::cli_main(argc, argv, std::cout, std::cerr); }
