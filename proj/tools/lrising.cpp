#include <iostream>
#include <string>
#include <vector>

#include "lrising/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lrising::cli::run(args, std::cout, std::cerr);
}
