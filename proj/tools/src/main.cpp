#include "skeldiff_cli/cli.hpp"

int main(int argc, char** argv) { return skeldiff::cli::run_cli(argc, argv); }
