#include <iostream>

#include "fct_cli/dispatch.hpp"

int main(int argc, char** argv) { return fct::cli::dispatch(argc, argv, std::cout, std::cerr); }
