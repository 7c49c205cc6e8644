#include <iostream>
#include <string>
#include <vector>

#include "bagcert/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return bagcert::cli::run(args, std::cout, std::cerr);
}
