#include "cli_app.hpp"

int main(int argc, char** argv) { return sohot::cli::run_cli(argc, argv); }
