#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) { return etc::cli::run(argc, argv, std::cerr); }
