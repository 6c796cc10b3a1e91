#include <iostream>
#include <string>
#include <vector>

#include "qgibbs/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qgibbs::cli::run(args, std::cout, std::cerr);
}
