#include <string>
#include <vector>

#include "nphisd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return nphisd::run_cli(std::move(args));
}
