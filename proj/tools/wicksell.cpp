#include "wicksell/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  return wicksell::run_cli(argc, argv, std::cout, std::cerr);
}
