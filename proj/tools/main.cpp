#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return vpidm::cli::run(argc, argv, std::cerr); }
