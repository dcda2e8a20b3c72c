#include "cli_app.hpp"

int main(int argc, char** argv) { return ssa::cli::run_cli(argc, argv); }
