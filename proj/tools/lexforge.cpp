#include <iostream>
#include <string>
#include <vector>

#include "lexforge_cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return lexforge::cli::run(args, std::cout, std::cerr);
}
