#include <iostream>

#include "trialmatch/service/cli.h"

int main(int argc, char** argv) { return trialmatch::service::run_cli(argc, argv, std::cout, std::cerr); }
