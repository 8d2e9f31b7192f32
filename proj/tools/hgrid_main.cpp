#include "cli_app.hpp"

int main(int argc, char** argv) { return hgrid::cli::run_cli(argc, argv); }
