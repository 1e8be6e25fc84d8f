#include <string>
#include <vector>

#include "zsicl/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return zsicl::cli_main(args);
}
