#include <string>
#include <vector>

#include "xdiff/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return xdiff::cli::main(args);
}
