#include <iostream>

#include "mpedge/cli.hpp"

int main(int argc, char** argv) { return mpedge::dispatch(argc, argv, std::cout, std::cerr); }
