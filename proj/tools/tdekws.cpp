#include <iostream>

#include "tdekws/cli.hpp"

int main(int argc, char** argv) {
  return tdekws::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
