#include <iostream>

#include "kgm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return kgm::run_command(args, std::cout, std::cerr);
}
