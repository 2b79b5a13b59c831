#include <iostream>
#include <string>
#include <vector>

#include "crucible/cli/dispatch.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return crucible::cli::dispatch(args, std::cout, std::cerr);
}
