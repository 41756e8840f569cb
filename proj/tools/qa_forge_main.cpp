#include <vector>

#include "qaforge/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qaforge::run_cli(args);
}
