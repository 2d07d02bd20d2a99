#include <vector>

#include "btmg/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return btmg::cli_dispatch(std::move(args));
}
