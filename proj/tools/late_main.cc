#include <iostream>
#include <string>
#include <vector>

#include "late/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return late::run_cli(args, std::cout, std::cerr);
}
