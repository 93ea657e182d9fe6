#include <vector>

#include "symbiotic/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return symbiotic::cli::run(args);
}
