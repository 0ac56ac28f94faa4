#include <string>
#include <vector>

#include "lexsem/cli.hpp"

int main(int argc, char** argv) {
  return lexsem::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
