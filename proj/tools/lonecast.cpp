#include "lonecast/cli.hpp"

int main(int argc, char** argv) { return lonecast::cli::run_cli(argc, argv); }
