#include "tickprov/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return tickprov::cli::run_cli(args);
}
