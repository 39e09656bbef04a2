#include <iostream>
#include <string>
#include <vector>

#include "commscope/cli.h"

int main(int argc, char** argv) {
  return commscope::cli::run(std::vector<std::string>(argv, argv + argc),
                             std::cout, std::cerr);
}
