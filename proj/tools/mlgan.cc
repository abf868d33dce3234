#include <iostream>

#include "mlgan/cli.h"

int main(int argc, char** argv) {
  return mlgan::RunCli(argc, argv, std::cout, std::cerr);
}
