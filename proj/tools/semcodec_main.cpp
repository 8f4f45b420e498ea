#include "semcodec/cli.hpp"

int main(int argc, char **argv) { return semcodec::cli::run_cli(argc, argv); }
