#include <iostream>
#include <string>
#include <vector>

#include "fbdsde/cli.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return fbdsde::RunCommand(args, std::cout, std::cerr);
}
