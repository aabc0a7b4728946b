#include "pnce_cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return pnce::cli::cli_dispatch(argc, argv, std::cout, std::cerr);
}
