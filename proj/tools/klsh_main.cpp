#include <iostream>
#include <string>
#include <vector>

#include "klsh/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return klsh::run_cli(args, std::cerr);
}
