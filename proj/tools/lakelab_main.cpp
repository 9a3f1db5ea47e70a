#include <string>
#include <vector>

#include "lakelab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return lakelab::run_cli(args);
}
