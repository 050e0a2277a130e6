#include <iostream>

#include "streamrisk/cli.hpp"

int main(int argc, char** argv) { return streamrisk::run_cli(argc, argv, std::cout, std::cerr); }
