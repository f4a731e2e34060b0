#include <iostream>
#include <string>
#include <vector>

#include "lossres/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lossres::cli::run(args, std::cout, std::cerr);
}
