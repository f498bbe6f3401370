#include <iostream>

#include "ammfm/cli.hpp"

int main(int argc, char** argv) {
  return ammfm::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
