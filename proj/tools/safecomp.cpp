#include <iostream>

#include "safecomp/app.hpp"

int main(int argc, char** argv) { return safecomp::cli_main(argc, argv, std::cout, std::cerr); }
