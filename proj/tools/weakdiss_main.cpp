#include "weakdiss/cli/commands.hpp"

int main(int argc, char** argv) { return weakdiss::cli::run_cli(argc, argv); }
