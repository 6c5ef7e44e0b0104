#include "delight/cli/commands.hpp"

int main(int argc, char** argv) { return dlt::cli::runCli(argc, argv); }
