#include <iostream>

#include "oadesign/cli.hpp"

int main(int argc, char** argv)
{
    return oadesign::run_cli(argc, argv, std::cout, std::cerr);
}
