#include "cli.hpp"

int main(int argc, char** argv) { return lracma::cli::run_cli(argc, argv); }
