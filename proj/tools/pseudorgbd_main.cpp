#include <iostream>

#include "pseudorgbd/commands.hpp"

int main(int argc, char** argv) { return pseudorgbd::run_cli(argc, argv, std::cout, std::cerr); }
