#include "dode/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return dode::run_cli(argc, argv, std::cout, std::cerr);
}
