#include <cgnmt/cli.hpp>

int main(int argc, char** argv) { return cgnmt::cli::run_command(argc, argv); }
