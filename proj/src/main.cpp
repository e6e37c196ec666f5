#include <iostream>

#include "ssagait/cli.hpp"

int main(int argc, char** argv) {
  return ssagait::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
