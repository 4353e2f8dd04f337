#include <iostream>

#include "sizestruct/commands.hpp"

int main(int argc, char** argv) { return sizestruct::run_cli(argc, argv, std::cout, std::cerr); }
