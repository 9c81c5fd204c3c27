#include <iostream>

#include "xdctrl/cli.hpp"

int main(int argc, char** argv)
{
    return xdctrl::cli::run(argc, argv, std::cout, std::cerr);
}
