#include <vector>

#include "rejuv/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rejuv::cli::run_command(args);
}
