#include "pms/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
  pms::cli::install_interrupt_handler();
  return pms::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
