#include <iostream>
#include <string>
#include <vector>

#include "otom/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return otom::run_cli(args, std::cout, std::cerr);
}
