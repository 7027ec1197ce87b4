#include <iostream>
#include <string>
#include <vector>

#include "byzcount/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return byzcount::run_cli(args, std::cout, std::cerr);
}
