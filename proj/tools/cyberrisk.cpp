#include <iostream>

#include <cyberrisk/cli.hpp>

int main(int argc, char** argv) {
    return cyberrisk::cli::run_cli(argc, argv, std::cout, std::cerr);
}
