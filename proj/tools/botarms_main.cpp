#include <iostream>

#include "botarms/cli.h"

int main(int argc, char** argv) {
  return botarms::run_cli(argc, argv, std::cout, std::cerr);
}
