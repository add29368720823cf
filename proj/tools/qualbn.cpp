#include <iostream>
#include <string>
#include <vector>

#include "qualbn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return qualbn::run_cli(args, std::cout, std::cerr);
}
