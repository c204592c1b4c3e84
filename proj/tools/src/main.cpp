#include <iostream>

#include "vmic/cli.hpp"

int main(int argc, char** argv)
{
  return vmic::run_cli(argc, argv, std::cout, std::cerr);
}
